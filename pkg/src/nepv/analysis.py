"""Empirical checks of the convergence theory.

* :func:`estimate_order` fits ``log e_{k+1}`` against ``log e_k``.
* :func:`single_step_study` measures the error of one implicit step as a
  function of the nonlinearity strength.
* :func:`jacobian_diagnostics` inspects the bordered Jacobian at a solution.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import SubspaceIterate, fixed_point_jacobian, residual
from .solvers import SelectionStrategy, SolverConfig, reference_solution, solve, step_a_version

__all__ = [
    "PRECISION_FLOOR",
    "OrderEstimate",
    "SingleStepReport",
    "JacobianReport",
    "estimate_order",
    "single_step_study",
    "jacobian_diagnostics",
]

PRECISION_FLOOR = 1e-12


@dataclass
class OrderEstimate:
    order: float
    fit_window: tuple
    r_squared: float


def _error_sequence(trace):
    errors = np.asarray(trace.errors, dtype=float)
    if np.isfinite(trace.initial_error):
        return np.concatenate([[trace.initial_error], errors]), 0
    return errors, 1


def estimate_order(trace, floor=PRECISION_FLOOR, window=5, min_points=3):
    """Estimate the convergence order from an error history.

    The sequence is cut at the first error below ``floor``; the last
    ``window`` remaining errors are fitted by least squares.

    Parameters
    ----------
    trace : IterationTrace or array_like
        A trace with errors set, or the errors themselves (first entry is
        step 0).
    floor : float
        Errors at or below this value are treated as converged to
        precision. ``100 eps`` is always enforced as a lower bound.
    window : int
        Maximum number of errors in the fit.
    min_points : int
        Minimum number of usable errors.

    Returns
    -------
    OrderEstimate
        ``fit_window`` holds the first and last step index used.
    """
    if hasattr(trace, "records"):
        errors, offset = _error_sequence(trace)
    else:
        errors, offset = np.asarray(trace, dtype=float), 0
    if np.any(np.isnan(errors)):
        raise ValueError("trace has no errors; solve with a reference first")
    floor = max(floor, 100 * np.finfo(float).eps)
    below = np.flatnonzero(errors <= floor)
    stop = below[0] if below.size else errors.size
    start = max(0, stop - window)
    usable = errors[start:stop]
    if usable.size < min_points:
        raise ValueError(f"only {usable.size} errors above the precision floor {floor:g}")
    x, y = np.log(usable[:-1]), np.log(usable[1:])
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (slope * x + intercept)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return OrderEstimate(float(slope), (int(start + offset), int(stop - 1 + offset)), float(r2))


@dataclass
class SingleStepReport:
    alphas: np.ndarray
    err_A: np.ndarray
    err_J: np.ndarray
    slope_A: float
    slope_J: float
    coeff_A: float
    coeff_J: float

    @property
    def pred_A(self):
        return self.alphas * self.coeff_A

    @property
    def pred_J(self):
        return self.alphas * self.coeff_J


def _loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def single_step_study(family, v0, alphas, selection=None, jobs=1):
    """Error of one step of each implicit method versus nonlinearity strength.

    Parameters
    ----------
    family : callable or NepvProblem
        Maps ``alpha`` to a problem ``A(v) = A0 + alpha C(v)`` with ``p = 1``;
        a problem instance is turned into ``problem.with_alpha``.
    v0 : array_like
        Starting vector (normalized here).
    alphas : array_like
        Positive nonlinearity strengths.
    selection : SelectionStrategy, optional
        Eigenpair selection used by both methods.
    jobs : int
        Number of threads for the per-alpha steps.

    Returns
    -------
    SingleStepReport
    """
    if not callable(family):
        family = family.with_alpha
    alphas = np.sort(np.asarray(alphas, dtype=float))
    if alphas.size == 0 or alphas[0] <= 0:
        raise ValueError("alphas must be positive")
    selection = selection or SelectionStrategy("nearest_target", "rayleigh")
    v0 = np.asarray(v0, dtype=float).ravel()
    v0 = v0 / np.linalg.norm(v0)

    linear = family(0.0)
    # both implicit methods land on this vector in one step when alpha = 0
    v_star0 = step_a_version(linear, v0, selection)[0].V[:, 0]

    refs = []
    v_ref = v_star0
    for a in alphas:
        try:
            v_ref = reference_solution(family(a), v_ref)[:, 0]
        except RuntimeError as exc:
            raise RuntimeError(f"reference solve failed at alpha={a:g}") from exc
        refs.append(v_ref)

    def one(i):
        prob = family(alphas[i])
        out = []
        for method in ("a_version", "j_version"):
            tr = solve(prob, SolverConfig(method, max_iter=1, selection=selection), v0, reference=refs[i])
            out.append(tr.errors[0])
        return out

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            errs = list(pool.map(one, range(alphas.size)))
    else:
        errs = [one(i) for i in range(alphas.size)]
    err_A, err_J = np.array(errs).T

    target = linear.C(v_star0) @ v_star0
    coeff_A = float(np.linalg.norm(target - linear.C(v0) @ v_star0))
    coeff_J = float(np.linalg.norm(target - linear.dCv(v0) @ v_star0))
    return SingleStepReport(
        alphas, err_A, err_J,
        _loglog_slope(alphas, err_A), _loglog_slope(alphas, err_J),
        coeff_A, coeff_J,
    )


@dataclass
class JacobianReport:
    smallest_singular_value: float
    condition_number: float
    near_singular: bool
    residual: float


def jacobian_diagnostics(problem, solution, threshold=1e-10):
    """Singular-value report of the bordered Jacobian at a computed solution."""
    if not isinstance(solution, SubspaceIterate):
        solution = SubspaceIterate(*solution)
    res = residual(problem, solution).norm
    if res > 1e-8:
        raise ValueError(f"not a solution: residual {res:.3e} exceeds 1e-8")
    sv = fixed_point_jacobian(problem, solution).singular_values()
    smin = float(sv[-1])
    cond = float(sv[0] / smin) if smin > 0 else float("inf")
    return JacobianReport(smin, cond, smin < threshold, res)

