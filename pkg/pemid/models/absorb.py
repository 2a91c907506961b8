"""Fold the last linear layer of a scheduling network into affine LPV matrices.

With ``p = W h(x, u) + b`` and ``M(p) = M0 + sum_i p_i M_i`` the same map reads
``M'(h) = (M0 + sum_i b_i M_i) + sum_j h_j (sum_i W_ij M_i)``, so the network's
hidden features act as the scheduling variables.
"""

from dataclasses import dataclass
from typing import Any, Dict, Mapping

import jax
import jax.numpy as jnp
import numpy as np

from pemid.core.exceptions import ModelStructureError
from pemid.models.nets import FeedforwardNet, ffn_features
from pemid.models.structure import ModelStructure

AFFINE_LEAVES = ("x.A", "x.B", "y.C", "y.D", "z.A", "z.B", "e.C")


@dataclass(frozen=True)
class AbsorbedScheduling:
    """Self-scheduled plant whose scheduling variables are the hidden features of psi."""

    structure: ModelStructure
    psi_hidden: FeedforwardNet
    leaves: Dict[str, jax.Array]

    def features(self, x: jax.Array, u: jax.Array) -> jax.Array:
        inputs = x if self.structure.psi_inputs == "x" else jnp.concatenate([x, u])
        return ffn_features(self.psi_hidden, inputs)

    def matrix(self, name: str, h: jax.Array) -> jax.Array:
        coefficients = self.leaves[name]
        return jnp.tensordot(jnp.concatenate([jnp.ones(1), h]), coefficients, axes=1)

    def simulate(self, x0: Any, u: Any) -> np.ndarray:
        """Plant-only simulation; returns ``(N, ny)`` outputs."""
        ms = self.structure

        def step(x: jax.Array, u_k: jax.Array) -> Any:
            h = self.features(x, u_k)
            y = self.matrix("y.C", h) @ x
            if ms.feedthrough:
                y = y + self.matrix("y.D", h) @ u_k
            x_next = self.matrix("x.A", h) @ x + self.matrix("x.B", h) @ u_k
            return x_next, y

        _, y = jax.lax.scan(step, jnp.asarray(x0, dtype=jnp.float64), jnp.asarray(u))
        return np.asarray(y)


def absorb_scheduling_output(ms: ModelStructure, theta: Mapping[str, Any]) -> AbsorbedScheduling:
    """Rewrite a self-scheduled affine model with psi's output layer folded in.

    Raises:
        ModelStructureError: If the model is not self-scheduled through a network
            with at least one hidden layer and no bypass
    """
    if ms.family != "lpv_self" or ms.oracle_scheduling is not None:
        raise ModelStructureError("Absorption needs a self-scheduled model with a psi network")
    shape = ms.psi_shape
    if shape.n_layers < 2 or shape.bypass:
        raise ModelStructureError("psi needs a hidden layer and no bypass to be absorbed")

    psi = FeedforwardNet.from_params(shape, theta, "psi.net")
    W, b = psi.weights[-1], psi.biases[-1]
    leaves: Dict[str, jax.Array] = {}
    for name in AFFINE_LEAVES:
        if name not in theta or jnp.ndim(theta[name]) != 3:
            continue
        M = jnp.asarray(theta[name])
        base = M[0] + jnp.tensordot(b, M[1:], axes=1)
        slopes = jnp.einsum("ij,irc->jrc", W, M[1:])
        leaves[name] = jnp.concatenate([base[None], slopes])
    return AbsorbedScheduling(ms, psi, leaves)
