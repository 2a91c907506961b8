"""Predictor and simulator recursions over whole sequences (``jax.lax.scan``)."""

from typing import Any, Mapping, NamedTuple, Optional, Protocol, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from pemid.core.exceptions import DimensionMismatchError, MissingSchedulingError
from pemid.models.maps import _noise_output, _noise_state, _plant, resolve_scheduling
from pemid.models.structure import ModelStructure

Params = Mapping[str, Any]


class SequenceData(Protocol):
    u: Any
    y: Any
    p: Optional[Any]


class RolloutResult(NamedTuple):
    """Per-step outputs of the one-step-ahead predictor.

    ``y_plant`` is the process-model output, which equals the simulated output
    when the same initial process state is used. ``x`` and ``z`` include the
    terminal state as their last row.
    """

    y_pred: jax.Array
    e_pred: jax.Array
    y_plant: jax.Array
    v_hat: jax.Array
    x: jax.Array
    z: jax.Array


def _scheduling_sequence(ms: ModelStructure, p: Optional[Any], n: int) -> jax.Array:
    if ms.needs_scheduling_data:
        if p is None:
            raise MissingSchedulingError(ms.family)
        p = jnp.asarray(p, dtype=jnp.float64)
        if p.shape != (n, ms.n_p):
            raise DimensionMismatchError("scheduling sequence", (n, ms.n_p), p.shape)
        return p
    return jnp.zeros((n, 0))


def _check_sequence(name: str, seq: Any, width: int) -> jax.Array:
    seq = jnp.asarray(seq, dtype=jnp.float64)
    if seq.ndim != 2 or seq.shape[1] != width:
        raise DimensionMismatchError(f"{name} sequence", f"(N, {width})", seq.shape)
    return seq


def _split_w0(ms: ModelStructure, w0: Any) -> Tuple[jax.Array, jax.Array]:
    w0 = jnp.asarray(w0, dtype=jnp.float64)
    if w0.shape != (ms.nw,):
        raise DimensionMismatchError("initial state", (ms.nw,), w0.shape)
    return w0[: ms.nx], w0[ms.nx :]


def predictor_rollout(
    ms: ModelStructure,
    theta: Params,
    w0: Any,
    data: SequenceData,
    saturation: Optional[float] = None,
) -> RolloutResult:
    """One-step-ahead predictor run over a dataset.

    For each sample: ``x+ = fx(x, u)``, ``z+ = fz(z, x, u, y - gx(x, u))``,
    ``y_pred = gx(x, u) - gz(z, x, u)`` and ``e_pred = y - y_pred``.
    ``saturation`` clips states to ``[-saturation, saturation]``.
    """
    u = _check_sequence("input", data.u, ms.nu)
    y = _check_sequence("output", data.y, ms.ny)
    if u.shape[0] != y.shape[0]:
        raise DimensionMismatchError("output sequence length", u.shape[0], y.shape[0])
    p_seq = _scheduling_sequence(ms, data.p, u.shape[0])
    x0, z0 = _split_w0(ms, w0)

    def step(
        carry: Tuple[jax.Array, jax.Array], inputs: Tuple[jax.Array, jax.Array, jax.Array]
    ) -> Tuple[Tuple[jax.Array, jax.Array], Tuple[jax.Array, ...]]:
        x, z = carry
        u_k, y_k, p_k = inputs
        p = resolve_scheduling(ms, theta, x, u_k, p_k if ms.needs_scheduling_data else None)
        x_next, y_plant = _plant(ms, theta, x, u_k, p)
        v = y_k - y_plant
        z_next = _noise_state(ms, theta, z, x, u_k, v, p)
        y_pred = y_plant - _noise_output(ms, theta, z, x, u_k, p)
        if saturation is not None:
            x_next = jnp.clip(x_next, -saturation, saturation)
            z_next = jnp.clip(z_next, -saturation, saturation)
        return (x_next, z_next), (x, z, y_plant, y_pred)

    (x_n, z_n), (xs, zs, y_plant, y_pred) = jax.lax.scan(step, (x0, z0), (u, y, p_seq))
    return RolloutResult(
        y_pred=y_pred,
        e_pred=y - y_pred,
        y_plant=y_plant,
        v_hat=y - y_plant,
        x=jnp.concatenate([xs, x_n[None]]),
        z=jnp.concatenate([zs, z_n[None]]),
    )


def simulation_rollout(
    ms: ModelStructure,
    theta: Params,
    x0: Any,
    u: Any,
    p: Optional[Any] = None,
) -> jax.Array:
    """Plant-only simulation (noise maps set to zero); returns ``(N, ny)`` outputs."""
    u = _check_sequence("input", u, ms.nu)
    p_seq = _scheduling_sequence(ms, p, u.shape[0])
    x0 = jnp.asarray(x0, dtype=jnp.float64)
    if x0.shape != (ms.nx,):
        raise DimensionMismatchError("initial process state", (ms.nx,), x0.shape)

    def step(x: jax.Array, inputs: Tuple[jax.Array, jax.Array]) -> Tuple[jax.Array, jax.Array]:
        u_k, p_k = inputs
        p = resolve_scheduling(ms, theta, x, u_k, p_k if ms.needs_scheduling_data else None)
        x_next, y = _plant(ms, theta, x, u_k, p)
        return x_next, y

    _, y_sim = jax.lax.scan(step, x0, (u, p_seq))
    return y_sim


def _noise_rollout(
    ms: ModelStructure,
    theta: Params,
    z0: Any,
    x: Any,
    u: Any,
    signal: Any,
    p: Optional[Any],
    forward: bool,
) -> Tuple[jax.Array, jax.Array]:
    x = _check_sequence("process state", x, ms.nx)
    u = _check_sequence("input", u, ms.nu)
    s = _check_sequence("noise", signal, ms.ny)
    p_seq = _scheduling_sequence(ms, p, u.shape[0])
    z0 = jnp.asarray(z0, dtype=jnp.float64)

    def step(
        z: jax.Array, inputs: Tuple[jax.Array, ...]
    ) -> Tuple[jax.Array, Tuple[jax.Array, jax.Array]]:
        x_k, u_k, s_k, p_k = inputs
        p = resolve_scheduling(ms, theta, x_k, u_k, p_k if ms.needs_scheduling_data else None)
        g = _noise_output(ms, theta, z, x_k, u_k, p)
        if forward:
            out = s_k - g
            z_next = _noise_state(ms, theta, z, x_k, u_k, out, p)
        else:
            out = g + s_k
            z_next = _noise_state(ms, theta, z, x_k, u_k, s_k, p)
        return z_next, (out, z)

    _, (out, zs) = jax.lax.scan(step, z0, (x, u, s, p_seq))
    return out, zs


def noise_forward_rollout(
    ms: ModelStructure,
    theta: Params,
    z0: Any,
    x: Any,
    u: Any,
    e: Any,
    p: Optional[Any] = None,
) -> Tuple[jax.Array, jax.Array]:
    """Filter innovations ``e`` through H along a given process-state path; returns ``(v, z)``."""
    return _noise_rollout(ms, theta, z0, x, u, e, p, forward=True)


def noise_inverse_rollout(
    ms: ModelStructure,
    theta: Params,
    z0: Any,
    x: Any,
    u: Any,
    v: Any,
    p: Optional[Any] = None,
) -> Tuple[jax.Array, jax.Array]:
    """Whiten disturbances ``v`` through H^-1 along a process-state path.

    Returns ``(e, z)``.
    """
    return _noise_rollout(ms, theta, z0, x, u, v, p, forward=False)


def to_numpy(result: RolloutResult) -> RolloutResult:
    return RolloutResult(*(np.asarray(item) for item in result))
