"""Prediction-error loss, elastic-net and group-lasso penalties.

:class:`PemProblem` binds a model structure to one dataset and hands out compiled
objectives over the flat parameter vector ``[theta, w0]``.
"""

from typing import Any, Dict, Mapping, Optional, Sequence, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from pemid.diff.objective import ObjectiveHandle
from pemid.models.rollout import Params, RolloutResult, SequenceData, predictor_rollout
from pemid.models.structure import W0_GROUP, ModelStructure, build_layout, group_index_sets
from pemid.training.config import TrainConfig
from pemid.training.l1split import L1Split


def pem_loss(
    ms: ModelStructure,
    theta: Params,
    w0: Any,
    data: SequenceData,
    saturation: Optional[float] = None,
) -> jax.Array:
    """Mean squared one-step-ahead prediction residual norm ``(1/N) sum ||e_k||^2``."""
    e = predictor_rollout(ms, theta, w0, data, saturation).e_pred
    return jnp.sum(e**2) / e.shape[0]


def safe_norm(v: jax.Array) -> jax.Array:
    """Euclidean norm with a zero (sub)gradient at the origin."""
    sq = jnp.sum(v**2)
    positive = sq > 0
    return jnp.where(positive, jnp.sqrt(jnp.where(positive, sq, 1.0)), 0.0)


def group_penalty(
    groups: Sequence[Any], weights: Optional[Sequence[float]] = None
) -> jax.Array:
    """``sum_i w_i ||g_i||_2`` over group value vectors."""
    total = jnp.asarray(0.0)
    for i, g in enumerate(groups):
        w = 1.0 if weights is None else weights[i]
        total = total + w * safe_norm(jnp.asarray(g, dtype=jnp.float64))
    return total


def regularizer(
    theta: Any,
    w0: Any,
    cfg: TrainConfig,
    groups: Sequence[Any] = (),
    group_weights: Optional[Sequence[float]] = None,
) -> jax.Array:
    """``(rho_theta/2)||theta||^2 + tau||theta||_1 + (rho_w/2)||w0||^2 + tau_g sum ||theta_g||``.

    ``groups`` holds the values of each group; the group term is only added when
    ``cfg.tau_g > 0``.
    """
    theta = jnp.asarray(theta, dtype=jnp.float64)
    w0 = jnp.asarray(w0, dtype=jnp.float64)
    value = (
        0.5 * cfg.rho_theta * jnp.sum(theta**2)
        + cfg.tau * jnp.sum(jnp.abs(theta))
        + 0.5 * cfg.rho_w * jnp.sum(w0**2)
    )
    if cfg.tau_g > 0 and len(groups):
        value = value + cfg.tau_g * group_penalty(groups, group_weights)
    return value


# smallest l1 weight used with the split when only the group term is active
GROUP_ONLY_TAU = 1e-8


class PemProblem:
    """Training problem of one structure on one dataset.

    Objectives are compiled on first use and cached per penalty setting, so
    repeated multistart runs reuse the same executables.
    """

    def __init__(
        self,
        ms: ModelStructure,
        data: SequenceData,
        saturation: Optional[float] = None,
    ) -> None:
        self.ms = ms
        self.data = data
        self.saturation = saturation
        self.layout = build_layout(ms)
        self.theta_idx = self.layout.complement_indices([W0_GROUP])
        self.w0_idx = self.layout.group_indices([W0_GROUP])
        self.groups = group_index_sets(ms, self.layout)
        self._handles: Dict[Tuple[Any, ...], Tuple[ObjectiveHandle, L1Split]] = {}
        self._rollout = jax.jit(self._rollout_values)
        self.loss = ObjectiveHandle(self._loss_values, self.layout.size, "pem loss")
        self._w0_handle = ObjectiveHandle(
            self._w0_objective,
            ms.nw,
            "initial state",
            args=(jnp.zeros(self.layout.size), 0.0),
        )

    @property
    def n_samples(self) -> int:
        return int(np.shape(self.data.y)[0])

    def _split_values(self, values: jax.Array) -> Tuple[Dict[str, jax.Array], jax.Array]:
        leaves = self.layout.unflatten(values)
        return leaves, values[self.w0_idx]

    def _loss_values(self, values: jax.Array) -> jax.Array:
        leaves, w0 = self._split_values(values)
        return pem_loss(self.ms, leaves, w0, self.data, self.saturation)

    def _rollout_values(self, values: jax.Array) -> RolloutResult:
        leaves, w0 = self._split_values(values)
        return predictor_rollout(self.ms, leaves, w0, self.data)

    def rollout(self, values: np.ndarray) -> RolloutResult:
        """Unsaturated predictor rollout as numpy arrays."""
        result = self._rollout(jnp.asarray(values, dtype=jnp.float64))
        return RolloutResult(*(np.asarray(a) for a in result))

    def _weights(self, group_weights: Optional[Mapping[str, float]]) -> Tuple[float, ...]:
        group_weights = group_weights or {}
        return tuple(float(group_weights.get(name, 1.0)) for name in self.groups)

    def _group_values(self, values: jax.Array) -> list:
        return [values[idx] for idx in self.groups.values()]

    def objective(
        self,
        cfg: TrainConfig,
        group_weights: Optional[Mapping[str, float]] = None,
    ) -> ObjectiveHandle:
        """Unsplit ``V + R`` with the l1 term through ``|theta|`` (Adam phase)."""
        weights = self._weights(group_weights)
        key = ("full", cfg.rho_theta, cfg.tau, cfg.rho_w, cfg.tau_g, weights)
        if key not in self._handles:

            def fun(values: jax.Array) -> jax.Array:
                return self._loss_values(values) + regularizer(
                    values[self.theta_idx],
                    values[self.w0_idx],
                    cfg,
                    self._group_values(values),
                    weights,
                )

            self._handles[key] = (
                ObjectiveHandle(fun, self.layout.size, "training objective"),
                L1Split.identity(self.layout.size),
            )
        return self._handles[key][0]

    def split_objective(
        self,
        cfg: TrainConfig,
        group_weights: Optional[Mapping[str, float]] = None,
    ) -> Tuple[ObjectiveHandle, L1Split]:
        """``V + R`` over the split variables ``[theta+, theta-, w0]`` (quasi-Newton phase).

        Without any l1 or group term the problem is smooth and no split is made.
        """
        weights = self._weights(group_weights)
        tau = cfg.tau
        if cfg.tau_g > 0 and tau == 0:
            tau = GROUP_ONLY_TAU
        key = ("split", cfg.rho_theta, tau, cfg.rho_w, cfg.tau_g, weights)
        if key in self._handles:
            return self._handles[key]

        if tau <= 0:
            handle = self.objective(cfg, group_weights)
            self._handles[key] = (handle, L1Split.identity(self.layout.size))
            return self._handles[key]

        split = L1Split(self.layout.size, self.theta_idx, self.w0_idx, tau)

        def fun(z: jax.Array) -> jax.Array:
            plus, minus, other = split.parts(z)
            values = split.scatter(plus - minus, other)
            magnitudes = split.scatter(plus + minus, other)
            penalty = (
                0.5 * cfg.rho_theta * (jnp.sum(plus**2) + jnp.sum(minus**2))
                + split.penalty(z)
                + 0.5 * cfg.rho_w * jnp.sum(other**2)
            )
            if cfg.tau_g > 0:
                penalty = penalty + cfg.tau_g * group_penalty(
                    self._group_values(magnitudes), weights
                )
            return self._loss_values(values) + penalty

        self._handles[key] = (ObjectiveHandle(fun, split.dim, "split objective"), split)
        return self._handles[key]

    def _w0_objective(self, w0: jax.Array, values: jax.Array, rho_w: jax.Array) -> jax.Array:
        e = predictor_rollout(self.ms, self.layout.unflatten(values), w0, self.data).e_pred
        return jnp.sum(e**2) + 0.5 * rho_w * jnp.sum(w0**2)

    def initial_state_objective(self, values: np.ndarray, rho_w: float) -> ObjectiveHandle:
        """``sum_k ||e_k||^2 + (rho_w/2)||w0||^2`` over ``w0`` with theta frozen."""
        return self._w0_handle.bind(
            jnp.asarray(values, dtype=jnp.float64), jnp.asarray(rho_w, dtype=jnp.float64)
        )

    def group_norms(self, values: np.ndarray) -> Dict[str, float]:
        values = np.asarray(values)
        return {name: float(np.linalg.norm(values[idx])) for name, idx in self.groups.items()}
