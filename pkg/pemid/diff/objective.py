"""Scalar objectives over flat parameter vectors.

An :class:`ObjectiveHandle` wraps a pure jax function of the flat vector. Value and
gradient are compiled once per handle and are safe to call from several threads.
"""

import copy
from typing import Any, Callable, Sequence, Tuple, Union

import jax
import jax.numpy as jnp
import numpy as np

from pemid.core.exceptions import DimensionMismatchError, NonFiniteValueError
from pemid.diff.params import ParamVector

ArrayOrParams = Union[np.ndarray, ParamVector]


def _as_values(p: ArrayOrParams) -> np.ndarray:
    if isinstance(p, ParamVector):
        return p.values
    return np.asarray(p, dtype=np.float64)


class ObjectiveHandle:
    """Deterministic scalar objective with reverse-mode gradient.

    ``fun(values, *args)`` is differentiated with respect to ``values`` only.
    """

    def __init__(
        self,
        fun: Callable[..., jax.Array],
        dim: int,
        name: str = "objective",
        args: Sequence[Any] = (),
    ) -> None:
        self.fun = fun
        self.dim = dim
        self.name = name
        self.args = tuple(args)
        self._value = jax.jit(fun)
        self._value_and_grad = jax.jit(jax.value_and_grad(fun))

    def bind(self, *args: Any) -> "ObjectiveHandle":
        """Same compiled objective with different trailing arguments."""
        clone = copy.copy(self)
        clone.args = tuple(args)
        return clone

    def _check(self, values: np.ndarray) -> jax.Array:
        if values.shape != (self.dim,):
            raise DimensionMismatchError(self.name, (self.dim,), values.shape)
        return jnp.asarray(values, dtype=jnp.float64)

    def __call__(self, p: ArrayOrParams) -> float:
        value = float(self._value(self._check(_as_values(p)), *self.args))
        if not np.isfinite(value):
            raise NonFiniteValueError(self.name, f"value={value}")
        return value

    def value_and_grad(self, p: ArrayOrParams) -> Tuple[float, np.ndarray]:
        value, grad = self._value_and_grad(self._check(_as_values(p)), *self.args)
        value = float(value)
        grad = np.asarray(grad, dtype=np.float64)
        if not np.isfinite(value):
            raise NonFiniteValueError(self.name, f"value={value}")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteValueError(self.name, "gradient")
        return value, grad


def eval_value_and_grad(obj: ObjectiveHandle, p: ArrayOrParams) -> Tuple[float, np.ndarray]:
    """Objective value and exact gradient at ``p``.

    Raises:
        NonFiniteValueError: If the value or any gradient entry is NaN/Inf
        DimensionMismatchError: If ``p`` has the wrong length
    """
    return obj.value_and_grad(p)


def finite_diff_grad(obj: ObjectiveHandle, p: ArrayOrParams, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient, one coordinate at a time."""
    if h <= 0:
        raise ValueError(f"Step size h must be positive, got {h}")
    values = _as_values(p).copy()
    grad = np.zeros_like(values)
    for i in range(values.size):
        saved = values[i]
        values[i] = saved + h
        f_plus = obj(values)
        values[i] = saved - h
        f_minus = obj(values)
        values[i] = saved
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad
