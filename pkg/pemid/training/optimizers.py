"""Full-batch Adam and bound-constrained L-BFGS-B over an :class:`ObjectiveHandle`."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from pemid.diff.objective import ObjectiveHandle
from pemid.training.config import AdamOptions, QnOptions


@dataclass
class AdamResult:
    x: np.ndarray
    x_best: np.ndarray
    f_best: float
    iters: int
    grad_norm_initial: float
    grad_norm_final: float


def adam_run(
    obj: ObjectiveHandle,
    p0: np.ndarray,
    options: Optional[AdamOptions] = None,
) -> AdamResult:
    """Adam with bias correction on full-batch gradients.

    ``x`` is the last iterate; ``x_best`` the evaluated iterate with the lowest
    objective (the final iterate included).
    """
    options = options or AdamOptions()
    x = np.array(p0, dtype=np.float64)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    x_best, f_best = x.copy(), np.inf
    grad_norm_initial = grad_norm = np.nan

    for k in range(1, options.iters + 1):
        f, g = obj.value_and_grad(x)
        grad_norm = float(np.linalg.norm(g))
        if k == 1:
            grad_norm_initial = grad_norm
        if f < f_best:
            x_best, f_best = x.copy(), f
        m = options.beta1 * m + (1.0 - options.beta1) * g
        v = options.beta2 * v + (1.0 - options.beta2) * g**2
        m_hat = m / (1.0 - options.beta1**k)
        v_hat = v / (1.0 - options.beta2**k)
        x = x - options.eta * m_hat / (np.sqrt(v_hat) + options.eps)

    if options.iters > 0:
        f, g = obj.value_and_grad(x)
        grad_norm = float(np.linalg.norm(g))
        if f < f_best:
            x_best, f_best = x.copy(), f
    else:
        f_best = obj(x)
    return AdamResult(x, x_best, f_best, options.iters, grad_norm_initial, grad_norm)


@dataclass
class QnResult:
    x: np.ndarray
    fun: float
    iters: int
    n_evals: int
    converged: bool
    line_search_failed: bool
    message: str
    history: List[float] = field(default_factory=list)


def qn_run(
    obj: ObjectiveHandle,
    p0: np.ndarray,
    bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    options: Optional[QnOptions] = None,
) -> QnResult:
    """Minimize with L-BFGS-B inside box ``bounds``.

    ``p0`` is projected onto the box first. Stops on ``max_iters``, on a projected
    gradient infinity norm below ``grad_tol`` or on a relative objective change
    below ``step_tol``. A failed line search is not an error: the best accepted
    iterate is returned with ``line_search_failed`` set. ``history`` holds the
    objective at every accepted iterate.
    """
    options = options or QnOptions()
    n = np.size(p0)
    lower, upper = bounds if bounds is not None else (np.full(n, -np.inf), np.full(n, np.inf))
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if np.any(lower > upper):
        raise ValueError("Inconsistent bounds: lower > upper")
    x0 = np.clip(np.asarray(p0, dtype=np.float64), lower, upper)

    if options.max_iters == 0 or n == 0:
        f0 = obj(x0)
        return QnResult(x0, f0, 0, 1, n == 0, False, "no iterations", [f0])

    history: List[float] = [obj(x0)]

    def record(intermediate_result: optimize.OptimizeResult) -> None:
        history.append(float(intermediate_result.fun))

    res = optimize.minimize(
        obj.value_and_grad,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=optimize.Bounds(lower, upper),
        callback=record,
        options={
            "maxiter": options.max_iters,
            "maxfun": options.max_evaluations,
            "maxcor": options.memory,
            "gtol": options.grad_tol,
            "ftol": options.step_tol,
            "maxls": options.max_line_search,
        },
    )
    message = str(res.message)
    line_search_failed = "ABNORMAL" in message.upper()

    x, fun = np.asarray(res.x, dtype=np.float64), float(res.fun)
    if history[0] < fun:
        # L-BFGS-B never accepts an increase; guard the failed-search corner
        x, fun = x0, history[0]
    return QnResult(
        x=np.clip(x, lower, upper),
        fun=fun,
        iters=int(res.nit),
        n_evals=int(res.nfev),
        converged=bool(res.success),
        line_search_failed=line_search_failed,
        message=message,
        history=history,
    )
