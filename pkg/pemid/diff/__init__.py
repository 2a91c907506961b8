"""Flat parameter vectors and differentiable objective evaluation."""

from pemid.diff.objective import ObjectiveHandle, eval_value_and_grad, finite_diff_grad
from pemid.diff.params import (
    AxisLabel,
    ParamLayout,
    ParamSpec,
    ParamVector,
    flatten,
    unflatten,
)

__all__ = [
    "AxisLabel",
    "ObjectiveHandle",
    "ParamLayout",
    "ParamSpec",
    "ParamVector",
    "eval_value_and_grad",
    "finite_diff_grad",
    "flatten",
    "unflatten",
]
