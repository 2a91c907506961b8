"""Split an innovation-form system into a process part and a noise part.

Given ``w+ = f_w(w, u, e)``, ``y = g_w(w, u) + e`` the process state follows the
noise-free recursion ``x+ = f_w(x, u, 0)`` and the noise state is the
difference ``z = w - x``.
"""

from dataclasses import dataclass
from typing import Any, Callable, Tuple

import numpy as np

StateMap = Callable[[Any, Any, Any], Any]
OutputMap = Callable[[Any, Any], Any]


@dataclass(frozen=True)
class SeparatedSystem:
    f_x: Callable[[Any, Any], Any]
    g_x: Callable[[Any, Any], Any]
    f_z: Callable[[Any, Any, Any, Any], Any]
    g_z: Callable[[Any, Any, Any], Any]
    x0: np.ndarray
    z0: np.ndarray

    def simulate(self, u: np.ndarray, e: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Run both parts; returns ``(y0, v, y)`` with ``y = y0 + v``."""
        x, z = self.x0, self.z0
        y0, v = [], []
        for u_k, e_k in zip(u, e):
            y0_k = np.asarray(self.g_x(x, u_k))
            v_k = np.asarray(self.g_z(z, x, u_k)) + e_k
            y0.append(y0_k)
            v.append(v_k)
            x, z = self.f_x(x, u_k), self.f_z(z, x, u_k, e_k)
        y0_arr, v_arr = np.asarray(y0), np.asarray(v)
        return y0_arr, v_arr, y0_arr + v_arr


def separate_system(f_w: StateMap, g_w: OutputMap, w0: Any) -> SeparatedSystem:
    """Build ``(f_x, g_x, f_z, g_z, x0, z0)`` with ``x0 = w0`` and ``z0 = 0``.

    The returned noise maps satisfy ``f_z(0, x, u, 0) = 0`` and ``g_z(0, x, u) = 0``.
    """
    w0 = np.asarray(w0, dtype=np.float64)

    def f_x(x: Any, u: Any) -> Any:
        return f_w(x, u, np.zeros_like(_innovation_template(g_w, x, u)))

    def g_x(x: Any, u: Any) -> Any:
        return g_w(x, u)

    def f_z(z: Any, x: Any, u: Any, e: Any) -> Any:
        return f_w(z + x, u, e) - f_w(x, u, np.zeros_like(e))

    def g_z(z: Any, x: Any, u: Any) -> Any:
        return g_w(z + x, u) - g_w(x, u)

    return SeparatedSystem(f_x, g_x, f_z, g_z, w0, np.zeros_like(w0))


def _innovation_template(g_w: OutputMap, x: Any, u: Any) -> np.ndarray:
    # e has the dimension of the output
    return np.asarray(g_w(x, u))
