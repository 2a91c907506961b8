"""One-step maps of the process model, the scheduling map and the noise model."""

from typing import Any, Callable, Mapping, NamedTuple, Optional, Tuple

import jax
import jax.numpy as jnp

from pemid.core.exceptions import MissingSchedulingError
from pemid.models.nets import apply_net
from pemid.models.structure import ModelStructure

Params = Mapping[str, Any]
RawNoiseState = Callable[[jax.Array, jax.Array, jax.Array, jax.Array], jax.Array]
RawNoiseOutput = Callable[[jax.Array, jax.Array, jax.Array], jax.Array]


class LpvMatrices(NamedTuple):
    """Process blocks ``[[A, B], [C, D]]`` and noise blocks ``[[Az, Bz], [Cz, 0]]``."""

    A: jax.Array
    B: jax.Array
    C: jax.Array
    D: Optional[jax.Array]
    Az: jax.Array
    Bz: jax.Array
    Cz: jax.Array


def scheduling_map(ms: ModelStructure, theta: Params, x: jax.Array, u: jax.Array) -> jax.Array:
    """Scheduling vector ``p = psi(x, u)`` of a self-scheduled model."""
    if ms.oracle_scheduling is not None:
        # unnormalized sinc: sin(a)/a
        return jnp.sinc(x[ms.oracle_scheduling.state_index] / jnp.pi)[None]
    inputs = x if ms.psi_inputs == "x" else jnp.concatenate([x, u])
    return apply_net(ms.psi_shape, theta, "psi.net", inputs)


def resolve_scheduling(
    ms: ModelStructure,
    theta: Params,
    x: jax.Array,
    u: jax.Array,
    p: Optional[jax.Array],
) -> Optional[jax.Array]:
    if ms.family == "lpv_self":
        return scheduling_map(ms, theta, x, u)
    if ms.family == "lpv_external":
        if p is None:
            raise MissingSchedulingError(ms.family)
        return jnp.asarray(p)
    return None


def _affine(coefficients: jax.Array, p: jax.Array) -> jax.Array:
    return jnp.tensordot(jnp.concatenate([jnp.ones(1), p]), coefficients, axes=1)


def lpv_matrices(ms: ModelStructure, theta: Params, p: jax.Array) -> LpvMatrices:
    """Evaluate the LPV matrix functions at scheduling vector ``p``."""
    nx, nu, ny, nz = ms.nx, ms.nu, ms.ny, ms.nz
    if ms.lpv_param == "affine":
        A = _affine(theta["x.A"], p)
        B = _affine(theta["x.B"], p)
        C = _affine(theta["y.C"], p)
        D = _affine(theta["y.D"], p) if ms.feedthrough else None
    else:
        out = apply_net(ms.plant_lpv_shape, theta, "x.M", p)
        sizes = [nx * nx, nx * nu, ny * nx]
        A, B, C = (
            out[start : start + size].reshape(shape)
            for start, size, shape in zip(
                [0, sizes[0], sizes[0] + sizes[1]], sizes, [(nx, nx), (nx, nu), (ny, nx)]
            )
        )
        D = out[sum(sizes) :].reshape(ny, nu) if ms.feedthrough else None

    if nz > 0 and ms.noise == "lpv":
        if ms.lpv_param == "affine":
            Az = _affine(theta["z.A"], p)
            Bz = _affine(theta["z.B"], p)
            Cz = _affine(theta["e.C"], p)
        else:
            out = apply_net(ms.noise_lpv_shape, theta, "z.M", p)
            Az = out[: nz * nz].reshape(nz, nz)
            Bz = out[nz * nz : nz * nz + nz * ny].reshape(nz, ny)
            Cz = out[nz * nz + nz * ny :].reshape(ny, nz)
    else:
        Az, Bz, Cz = theta["z.A"], theta["z.B"], theta["e.C"]
    return LpvMatrices(A, B, C, D, Az, Bz, Cz)


def _plant(
    ms: ModelStructure,
    theta: Params,
    x: jax.Array,
    u: jax.Array,
    p: Optional[jax.Array],
) -> Tuple[jax.Array, jax.Array]:
    if ms.family == "nl":
        xu = jnp.concatenate([x, u])
        x_next = apply_net(ms.fx_shape, theta, "x.f", xu)
        y = apply_net(ms.gx_shape, theta, "y.g", xu if ms.feedthrough else x)
        return x_next, y
    if ms.is_lpv:
        mats = lpv_matrices(ms, theta, p)
        A, B, C, D = mats.A, mats.B, mats.C, mats.D
    else:
        A, B, C = theta["x.A"], theta["x.B"], theta["y.C"]
        D = theta["y.D"] if ms.feedthrough else None
    x_next = A @ x + B @ u
    y = C @ x
    if D is not None:
        y = y + D @ u
    return x_next, y


def plant_step(
    ms: ModelStructure,
    theta: Params,
    x: jax.Array,
    u: jax.Array,
    p: Optional[jax.Array] = None,
) -> Tuple[jax.Array, jax.Array]:
    """Process model step: ``(x+, y) = (fx(x, u), gx(x, u))``.

    Raises:
        MissingSchedulingError: If the family needs ``p`` and none is given
    """
    x, u = jnp.asarray(x), jnp.asarray(u)
    return _plant(ms, theta, x, u, resolve_scheduling(ms, theta, x, u, p))


def enforce_separation(
    f_raw: RawNoiseState, g_raw: RawNoiseOutput
) -> Tuple[RawNoiseState, RawNoiseOutput]:
    """Subtract the zero-state response so ``f(0, x, u, 0) = 0`` and ``g(0, x, u) = 0``."""

    def f_tilde(z: jax.Array, x: jax.Array, u: jax.Array, v: jax.Array) -> jax.Array:
        return f_raw(z, x, u, v) - f_raw(jnp.zeros_like(z), x, u, jnp.zeros_like(v))

    def g_tilde(z: jax.Array, x: jax.Array, u: jax.Array) -> jax.Array:
        return g_raw(z, x, u) - g_raw(jnp.zeros_like(z), x, u)

    return f_tilde, g_tilde


def _nl_noise_maps(ms: ModelStructure, theta: Params) -> Tuple[RawNoiseState, RawNoiseOutput]:
    def f_raw(z: jax.Array, x: jax.Array, u: jax.Array, v: jax.Array) -> jax.Array:
        return apply_net(ms.fz_shape, theta, "z.f", jnp.concatenate([z, x, u, v]))

    def g_raw(z: jax.Array, x: jax.Array, u: jax.Array) -> jax.Array:
        return apply_net(ms.gz_shape, theta, "e.g", jnp.concatenate([z, x, u]))

    return enforce_separation(f_raw, g_raw)


def _noise_output(
    ms: ModelStructure,
    theta: Params,
    z: jax.Array,
    x: jax.Array,
    u: jax.Array,
    p: Optional[jax.Array],
) -> jax.Array:
    if ms.nz == 0:
        return jnp.zeros(ms.ny)
    if ms.noise == "nl":
        return _nl_noise_maps(ms, theta)[1](z, x, u)
    Cz = lpv_matrices(ms, theta, p).Cz if ms.noise == "lpv" else theta["e.C"]
    return Cz @ z


def _noise_state(
    ms: ModelStructure,
    theta: Params,
    z: jax.Array,
    x: jax.Array,
    u: jax.Array,
    v: jax.Array,
    p: Optional[jax.Array],
) -> jax.Array:
    if ms.nz == 0:
        return z
    if ms.noise == "nl":
        return _nl_noise_maps(ms, theta)[0](z, x, u, v)
    if ms.noise == "lpv":
        mats = lpv_matrices(ms, theta, p)
        return mats.Az @ z + mats.Bz @ v
    return theta["z.A"] @ z + theta["z.B"] @ v


def noise_inverse_step(
    ms: ModelStructure,
    theta: Params,
    z: jax.Array,
    x: jax.Array,
    u: jax.Array,
    v: jax.Array,
    p: Optional[jax.Array] = None,
) -> Tuple[jax.Array, jax.Array]:
    """Inverse noise model: ``z+ = fz(z, x, u, v)``, ``e = gz(z, x, u) + v``."""
    z, x, u, v = map(jnp.asarray, (z, x, u, v))
    p = resolve_scheduling(ms, theta, x, u, p)
    return _noise_state(ms, theta, z, x, u, v, p), _noise_output(ms, theta, z, x, u, p) + v


def noise_forward_step(
    ms: ModelStructure,
    theta: Params,
    z: jax.Array,
    x: jax.Array,
    u: jax.Array,
    e: jax.Array,
    p: Optional[jax.Array] = None,
) -> Tuple[jax.Array, jax.Array]:
    """Forward noise model: ``v = e - gz(z, x, u)``, ``z+ = fz(z, x, u, v)``."""
    z, x, u, e = map(jnp.asarray, (z, x, u, e))
    p = resolve_scheduling(ms, theta, x, u, p)
    v = e - _noise_output(ms, theta, z, x, u, p)
    return _noise_state(ms, theta, z, x, u, v, p), v
