"""Smooth reformulation of l1 penalties: ``theta = theta+ - theta-`` with both halves >= 0."""

from dataclasses import dataclass
from typing import Any, Sequence, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from pemid.diff.params import ParamLayout, ParamSpec, ParamVector


@dataclass(frozen=True)
class L1Split:
    """Map between a flat vector of size ``n`` and its split form ``[theta+, theta-, other]``.

    ``theta_idx`` positions are split and penalized with ``tau * sum(theta+ + theta-)``;
    ``other_idx`` positions are copied unchanged. With no split positions the
    transform is the identity.
    """

    n: int
    theta_idx: np.ndarray
    other_idx: np.ndarray
    tau: float

    @classmethod
    def identity(cls, n: int) -> "L1Split":
        return cls(n, np.zeros(0, dtype=np.int64), np.arange(n), 0.0)

    @property
    def n_split(self) -> int:
        return int(self.theta_idx.size)

    @property
    def dim(self) -> int:
        return 2 * self.n_split + int(self.other_idx.size)

    @property
    def active(self) -> bool:
        return self.n_split > 0

    def parts(self, z: Any) -> Tuple[Any, Any, Any]:
        k = self.n_split
        return z[:k], z[k : 2 * k], z[2 * k :]

    def scatter(self, theta: jax.Array, other: jax.Array) -> jax.Array:
        out = jnp.zeros(self.n, dtype=jnp.float64)
        return out.at[self.theta_idx].set(theta).at[self.other_idx].set(other)

    def penalty(self, z: Any) -> Any:
        plus, minus, _ = self.parts(z)
        return self.tau * (plus.sum() + minus.sum())

    def to_split(self, values: np.ndarray) -> np.ndarray:
        """Canonical split ``theta+ = max(theta, 0)``, ``theta- = max(-theta, 0)``."""
        values = np.asarray(values, dtype=np.float64)
        theta = values[self.theta_idx]
        return np.concatenate(
            [np.maximum(theta, 0.0), np.maximum(-theta, 0.0), values[self.other_idx]]
        )

    def merge(self, z: np.ndarray) -> np.ndarray:
        plus, minus, other = self.parts(np.asarray(z, dtype=np.float64))
        values = np.zeros(self.n)
        values[self.theta_idx] = plus - minus
        values[self.other_idx] = other
        return values

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Zero lower bounds on both halves, unbounded elsewhere."""
        k = self.n_split
        lower = np.concatenate([np.zeros(2 * k), np.full(self.other_idx.size, -np.inf)])
        return lower, np.full(self.dim, np.inf)


def split_l1(
    p: ParamVector, tau: float, keep: Sequence[str] = ("w0",)
) -> Tuple[ParamVector, float, L1Split]:
    """Split every leaf outside the ``keep`` groups into nonnegative halves.

    Returns the augmented vector (leaves ``theta+``, ``theta-`` and the kept
    leaves, with lower bounds 0 on the halves), the linear penalty value
    ``tau * sum(theta+ + theta-)`` at that point and the split map. For
    ``tau <= 0`` the vector is returned unchanged with penalty 0.
    """
    if tau <= 0:
        return p, 0.0, L1Split.identity(p.dim)

    layout = p.layout
    split = L1Split(
        layout.size, layout.complement_indices(keep), layout.group_indices(keep), float(tau)
    )
    k = split.n_split
    specs = [ParamSpec("theta+", (k,)), ParamSpec("theta-", (k,))]
    specs += [spec for spec in layout if spec.group in keep]
    z = split.to_split(p.values)
    lower, upper = split.bounds()
    augmented = ParamVector(z, ParamLayout(specs), lower, upper)
    return augmented, float(split.penalty(z)), split
