"""Iterations for ``A(V) V = V S``.

Four methods are available:

``a_version``
    The self-consistent field iteration: each step takes ``p`` eigenvectors
    of ``A(V_k)``.
``j_version``
    Each step solves the eigenproblem of the Jacobian ``J(v_k)`` instead.
    For ``p = 1`` this is a standard (nonsymmetric) eigenproblem; for
    ``p > 1`` the coupled equation ``J(v_k) vec(V) = vec(V S)`` is solved
    inexactly by a Nelder-Mead search.
``newton``
    Newton's method on the bordered system for ``(vec(V), vec(S))``.
``j_inverse``
    Inverse iteration with ``J(v_k)``, for ``p = 1``.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy.optimize

from .core import (
    SubspaceIterate,
    as_basis,
    constraint_jacobian,
    lhs_map,
    orth_defect,
    residual,
    subspace_error,
)
from .linalg import fd_jacobian, kron, lstsq, sym_eig, thin_qr, unvec, vec

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "SelectionError",
    "InnerSolveError",
    "SelectionStrategy",
    "SolverConfig",
    "StepRecord",
    "IterationTrace",
    "select_eigenpairs",
    "real_eig",
    "step_a_version",
    "step_j_version_p1",
    "step_j_version_subspace",
    "step_newton",
    "step_j_inverse",
    "solve",
    "reference_solution",
]

METHODS = ("a_version", "j_version", "newton", "j_inverse")
SELECTIONS = ("smallest_p", "nearest_target", "cluster_lstsq")


class SelectionError(RuntimeError):
    """No admissible eigenpairs for the selection strategy."""


class InnerSolveError(RuntimeError):
    """The inexact inner solver made no progress."""


@dataclass
class SelectionStrategy:
    """Rule choosing ``p`` eigenpairs from a full eigendecomposition.

    ``target`` is a number, ``"rayleigh"`` (Rayleigh quotient of the
    previous iterate with the matrix being decomposed) or ``"smallest"``
    (the smallest admissible eigenvalue).
    """

    kind: str = "smallest_p"
    target: Union[float, str] = "rayleigh"
    delta: float = 0.1

    def __post_init__(self):
        if self.kind not in SELECTIONS:
            raise ValueError(f"unknown selection kind {self.kind!r}")
        if self.kind == "cluster_lstsq" and not 0 < self.delta < 1:
            raise ValueError("cluster radius delta must lie in (0, 1)")
        if isinstance(self.target, str) and self.target not in ("rayleigh", "smallest"):
            raise ValueError(f"unknown target {self.target!r}")


@dataclass
class SolverConfig:
    method: str = "a_version"
    tol: float = 1e-10
    max_iter: int = 200
    selection: SelectionStrategy = field(default_factory=SelectionStrategy)
    inexact_budget: int = 5000

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class StepRecord:
    iter: int
    error: float
    residual: float
    orth_defect: float
    eigenvalues: np.ndarray
    time: float


@dataclass
class IterationTrace:
    method: str
    records: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    status: str = "max_iter"
    final: Optional[SubspaceIterate] = None
    initial: Optional[np.ndarray] = None
    initial_residual: float = float("nan")
    initial_error: float = float("nan")

    def __len__(self):
        return len(self.records)

    @property
    def errors(self):
        return np.array([r.error for r in self.records])

    @property
    def residuals(self):
        return np.array([r.residual for r in self.records])

    @property
    def orth_defects(self):
        return np.array([r.orth_defect for r in self.records])

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def iterations(self):
        return len(self.records)

    def iterations_to(self, tol, key="residual"):
        """First step index whose residual (or error) is at most ``tol``."""
        for r in self.records:
            if getattr(r, key) <= tol:
                return r.iter
        return None

    def set_reference(self, V_ref):
        """Recompute the per-step errors against ``V_ref``."""
        if self.initial is not None:
            self.initial_error = subspace_error(self.initial, V_ref)
        for r, V in zip(self.records, self.iterates):
            r.error = subspace_error(V, V_ref)
        return self


def _jacobian(problem, v):
    if problem.has_analytic_jacobian:
        return problem.J(v)
    return fd_jacobian(lhs_map(problem), v)


def _rayleigh(M, X):
    X = as_basis(X)
    return float(np.trace(X.T @ M @ X) / np.trace(X.T @ X))


def real_eig(M, imag_tol=1e-8):
    """Real eigenpairs of a general matrix, eigenvalues ascending.

    Eigenvalues with imaginary part below ``imag_tol * max(1, |lambda|_max)``
    count as real.
    """
    w, X = np.linalg.eig(M)
    scale = max(1.0, float(np.max(np.abs(w))))
    keep = np.abs(w.imag) <= imag_tol * scale
    w, X = w[keep].real, X[:, keep].real
    order = np.argsort(w, kind="stable")
    X = X[:, order]
    norms = np.linalg.norm(X, axis=0)
    return w[order], X / np.where(norms > 0, norms, 1.0)


def select_eigenpairs(decomp, strategy, previous=None, p=1, matrix=None):
    """Choose ``p`` eigenpairs.

    Parameters
    ----------
    decomp : (eigenvalues, eigenvectors)
        Eigenvalues ascending, eigenvectors as columns.
    strategy : SelectionStrategy
    previous : ndarray, optional
        Previous iterate; needed by ``cluster_lstsq`` and a Rayleigh target.
    p : int
    matrix : ndarray, optional
        The decomposed matrix, used for Rayleigh quotients.

    Returns
    -------
    Y : ndarray, shape (n, p)
    Z : ndarray, shape (p, p)
    """
    w, X = decomp
    if w.size < p:
        raise SelectionError(f"only {w.size} admissible eigenpairs, need {p}")
    if strategy.kind == "smallest_p":
        return X[:, :p], np.diag(w[:p])

    if strategy.target == "smallest":
        target = w[0]
    elif strategy.target == "rayleigh":
        if previous is None or matrix is None:
            raise ValueError("a Rayleigh target needs the previous iterate and the matrix")
        target = _rayleigh(matrix, previous)
    else:
        target = float(strategy.target)

    if strategy.kind == "nearest_target":
        idx = np.sort(np.argsort(np.abs(w - target), kind="stable")[:p])
        return X[:, idx], np.diag(w[idx])

    # cluster_lstsq
    if p != 1:
        raise ValueError("cluster_lstsq selection is implemented for p = 1")
    if previous is None:
        raise ValueError("cluster_lstsq needs the previous iterate")
    idx = np.flatnonzero(np.abs(w - target) <= strategy.delta)
    if idx.size == 0:
        raise SelectionError(f"no eigenvalue within {strategy.delta} of {target:.6g}")
    Yc = X[:, idx]
    y = Yc @ lstsq(Yc, as_basis(previous)[:, 0])
    ny = np.linalg.norm(y)
    if ny == 0.0:
        raise SelectionError("previous iterate is orthogonal to the selected cluster")
    y = y / ny
    lam = _rayleigh(matrix, y) if matrix is not None else float(np.mean(w[idx]))
    return y[:, None], np.array([[lam]])


def _align_sign(v, v_prev):
    return -v if v @ v_prev < 0 else v


def _orthonormalize(Y, Z, V_prev):
    """Thin QR of ``Y`` and the similarity transform ``S = R^{-1} Z R``."""
    V, R = thin_qr(Y)
    S = np.linalg.solve(R, Z @ R)
    S = 0.5 * (S + S.T)
    if V.shape[1] == 1 and V_prev is not None and (V[:, 0] @ V_prev[:, 0]) < 0:
        V = -V
    return SubspaceIterate(V, S)


def step_a_version(problem, V_k, selection=None):
    """One self-consistent field step from ``V_k``.

    Returns the new iterate and the selected eigenvalues.
    """
    selection = selection or SelectionStrategy()
    V_k = as_basis(V_k)
    M = problem.A(V_k)
    Y, Z = select_eigenpairs(sym_eig(M), selection, V_k, V_k.shape[1], M)
    return _orthonormalize(Y, Z, V_k), np.diag(Z).copy()


def step_j_version_p1(problem, v_k, selection=None):
    """One J-version step for ``p = 1``: an eigenvector of ``J(v_k)``.

    ``J(v_k)`` is not symmetric, so only its real eigenpairs are candidates.
    Returns ``(v_next, lambda_next)``.
    """
    selection = selection or SelectionStrategy()
    v_k = np.asarray(v_k, dtype=float).ravel()
    M = _jacobian(problem, v_k)
    decomp = real_eig(M)
    if decomp[0].size == 0:
        raise SelectionError("J(v) has no real eigenvalues")
    Y, Z = select_eigenpairs(decomp, selection, v_k, 1, M)
    y = Y[:, 0] / np.linalg.norm(Y[:, 0])
    return _align_sign(y, v_k), float(Z[0, 0])


def _block_diagonal_part(J, n, p, rtol=1e-14):
    """Return ``M`` if ``J == I_p kron M`` up to ``rtol``, else ``None``."""
    M = J[:n, :n]
    if np.linalg.norm(J - kron(np.eye(p), M)) <= rtol * max(1.0, np.linalg.norm(J)):
        return M
    return None


def _sym_from_upper(s, p):
    S = np.zeros((p, p))
    S[np.triu_indices(p)] = s
    return S + np.triu(S, 1).T


def step_j_version_subspace(problem, V_k, S_k, selection=None, budget=5000, J=None):
    """One inexact J-version step for ``p > 1``.

    Minimizes ``r(V, S) = ||J(v_k) vec(V) - vec(V S)||^2`` over ``V = qf(V_0 + X)``
    and symmetric ``S`` with Nelder-Mead, using at most ``budget`` function
    evaluations. The start ``(V_0, S_0)`` is the eigenpair block of
    ``A(V_k)`` picked by ``selection``, so the inner solve looks for the
    solution the selection rule asks for rather than the one nearest to
    ``V_k``. When ``J(v_k)`` is block diagonal the equation reduces to a
    standard eigenproblem, which is solved exactly.

    ``S_k`` only enters the reported ``r0`` of the block-diagonal case.

    Returns
    -------
    iterate : SubspaceIterate
    info : dict
        ``r0`` and ``r`` (inner objective at the start and at the end),
        ``nfev`` and ``exact``.
    """
    selection = selection or SelectionStrategy()
    V_k = as_basis(V_k)
    n, p = V_k.shape
    S_k = 0.5 * (S_k + S_k.T)
    v_k = vec(V_k)
    J = _jacobian(problem, v_k) if J is None else J

    def objective_at(V, S):
        d = J @ vec(V) - vec(V @ S)
        return float(d @ d)

    M = _block_diagonal_part(J, n, p)
    if M is not None:
        if np.allclose(M, M.T, rtol=0, atol=1e-14 * max(1.0, np.linalg.norm(M))):
            decomp = sym_eig(M)
        else:
            decomp = real_eig(M)
        Y, Z = select_eigenpairs(decomp, selection, V_k, p, M)
        it = _orthonormalize(Y, Z, V_k)
        return it, {"r0": objective_at(V_k, S_k), "r": objective_at(it.V, it.S), "nfev": 0, "exact": True}

    start, _ = step_a_version(problem, V_k, selection)
    V_0, S_0 = start.V, start.S
    r0 = objective_at(V_0, S_0)
    if r0 == 0.0:
        return start, {"r0": r0, "r": r0, "nfev": 0, "exact": False}

    iu = np.triu_indices(p)
    m = n * p

    def unpack(x):
        V, _ = thin_qr(V_0 + unvec(x[:m], n, p))
        return V, _sym_from_upper(x[m:], p)

    def objective(x):
        try:
            V, S = unpack(x)
        except np.linalg.LinAlgError:
            return np.inf
        return objective_at(V, S)

    x0 = np.concatenate([np.zeros(m), S_0[iu]])
    # simplex edge comparable to the distance to the solution
    scale = max(np.sqrt(r0), 1e-12)
    best_x, best_r, nfev = x0, r0, 0
    while nfev < budget:
        simplex = np.vstack([best_x, best_x + scale * np.eye(best_x.size)])
        res = scipy.optimize.minimize(
            objective, best_x, method="Nelder-Mead",
            options={"initial_simplex": simplex, "maxfev": budget - nfev,
                     "xatol": 0.0, "fatol": 0.0, "adaptive": True},
        )
        nfev += res.nfev
        if not res.fun < best_r:
            break
        improvement = res.fun / best_r
        best_x, best_r = res.x, res.fun
        scale = max(np.sqrt(best_r), 1e-14)
        if improvement > 0.999:
            break
    if not best_r < r0:
        raise InnerSolveError(f"inner solver did not reduce r below {r0:.3e}")
    V, S = unpack(best_x)
    return SubspaceIterate(V, S), {"r0": r0, "r": best_r, "nfev": nfev, "exact": False}


def step_newton(problem, v_k, s_k):
    """One Newton step on the vectorized residual. Returns ``(v, s)``."""
    n, p = problem.n, problem.p
    v_k = np.asarray(v_k, dtype=float).ravel()
    s_k = np.asarray(s_k, dtype=float).ravel()
    V, S = unvec(v_k, n, p), unvec(s_k, p, p)
    F = np.concatenate([vec(problem.A(V) @ V - V @ S), vec(V.T @ V - np.eye(p))])
    m = n * p
    K = np.zeros((m + p * p, m + p * p))
    K[:m, :m] = _jacobian(problem, v_k) - kron(S.T, np.eye(n))
    K[:m, m:] = -kron(np.eye(p), V)
    K[m:, :m] = constraint_jacobian(V)
    if p == 1:
        try:
            d = np.linalg.solve(K, -F)
        except np.linalg.LinAlgError as exc:
            smin = np.linalg.svd(K, compute_uv=False)[-1]
            raise np.linalg.LinAlgError(f"singular Newton matrix (smallest singular value {smin:.3e})") from exc
    else:
        # rows (i, j) and (j, i) of the constraint block coincide
        d = lstsq(K, -F)
    return v_k + d[:m], s_k + d[m:]


def step_j_inverse(problem, v_k):
    """Solve ``J(v_k) w = v_k`` and normalize."""
    v_k = np.asarray(v_k, dtype=float).ravel()
    w = np.linalg.solve(_jacobian(problem, v_k), v_k)
    w = w / np.linalg.norm(w)
    return _align_sign(w, v_k)


def _rayleigh_block(problem, V):
    S = V.T @ problem.A(V) @ V
    return 0.5 * (S + S.T)


def solve(problem, config=None, V0=None, reference=None):
    """Run an iteration until the residual drops below ``config.tol``.

    The residual of each implicit-method iterate is measured with the
    Rayleigh block ``S = V^T A(V) V``; Newton uses its own ``S``.

    Parameters
    ----------
    problem : NepvProblem
    config : SolverConfig
    V0 : ndarray
        Initial orthonormal basis (a unit vector for ``p = 1``).
    reference : ndarray, optional
        Reference solution used for the error column of the trace.

    Returns
    -------
    IterationTrace
    """
    config = config or SolverConfig()
    V = as_basis(V0).copy()
    n, p = problem.n, problem.p
    if V.shape != (n, p):
        raise ValueError(f"V0 must have shape {(n, p)}, got {V.shape}")
    if orth_defect(V) > 1e-8:
        raise ValueError("V0 must be orthonormal")
    if config.method in ("j_inverse",) and p != 1:
        raise ValueError(f"{config.method} requires p = 1")
    if reference is not None:
        reference = as_basis(reference)

    S = _rayleigh_block(problem, V)
    trace = IterationTrace(method=config.method, initial=V.copy())
    if reference is not None:
        trace.initial_error = subspace_error(V, reference)
    trace.initial_residual = residual(problem, SubspaceIterate(V, S)).norm
    # stagnation is judged among iterates only; a start already near a
    # solution must not count against the first steps
    best, since_best = np.inf, 0
    sel = config.selection

    for k in range(1, config.max_iter + 1):
        t0 = time.perf_counter()
        try:
            if config.method == "a_version":
                it, lams = step_a_version(problem, V, sel)
                V = it.V
            elif config.method == "j_version" and p == 1:
                v, lam = step_j_version_p1(problem, V[:, 0], sel)
                V, lams = v[:, None], np.array([lam])
            elif config.method == "j_version":
                it, info = step_j_version_subspace(problem, V, S, sel, config.inexact_budget)
                V = it.V
                lams = np.linalg.eigvalsh(it.S)
                log.debug("inner solve k=%d r0=%.3e r=%.3e nfev=%d", k, info["r0"], info["r"], info["nfev"])
            elif config.method == "newton":
                v, s = step_newton(problem, vec(V), vec(S))
                V, S = unvec(v, n, p), unvec(s, p, p)
                lams = np.linalg.eigvals(S).real if p > 1 else S[0].copy()
            else:
                v = step_j_inverse(problem, V[:, 0])
                V = v[:, None]
                lams = None
        except SelectionError as exc:
            log.info("selection failed at step %d: %s", k, exc)
            trace.status = "selection_failed"
            break
        except InnerSolveError as exc:
            log.info("inner solver stalled at step %d: %s", k, exc)
            trace.status = "stagnated"
            break

        if config.method != "newton":
            S = _rayleigh_block(problem, V)
        if lams is None:
            lams = np.linalg.eigvalsh(S)
        res = residual(problem, SubspaceIterate(V, S)).norm
        err = subspace_error(V, reference) if reference is not None else float("nan")
        trace.records.append(StepRecord(k, err, res, orth_defect(V), np.sort(np.atleast_1d(lams)),
                                        time.perf_counter() - t0))
        trace.iterates.append(V.copy())
        log.debug("%s k=%d residual=%.3e error=%.3e", config.method, k, res, err)

        if res <= config.tol:
            trace.status = "converged"
            break
        if res < (1 - 1e-2) * best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= 10:
                trace.status = "stagnated"
                break
    else:
        trace.status = "max_iter"

    trace.final = SubspaceIterate(V, S)
    return trace


def reference_solution(problem, V, selection=None, tol=1e-13, max_iter=100):
    """Polish an approximate solution to high accuracy.

    Newton's method is used for ``p = 1`` and the self-consistent field
    iteration otherwise. The result is normalized and, for ``p = 1``,
    sign-aligned with ``V``.
    """
    V = as_basis(V)
    if problem.p == 1:
        v = V[:, 0] / np.linalg.norm(V[:, 0])
        s = np.array([v @ problem.A(v) @ v])
        for _ in range(max_iter):
            Vn = v[:, None]
            r = residual(problem, SubspaceIterate(Vn, s.reshape(1, 1))).norm
            if r <= tol:
                break
            v, s = step_newton(problem, v, s)
        else:
            raise RuntimeError("reference Newton iteration did not converge")
        v = v / np.linalg.norm(v)
        return _align_sign(v, V[:, 0])[:, None]
    Q, _ = thin_qr(V)
    trace = solve(problem, SolverConfig("a_version", tol=tol, max_iter=max(max_iter, 1000),
                                        selection=selection or SelectionStrategy()), Q)
    if not trace.converged:
        raise RuntimeError("reference SCF iteration did not converge")
    return trace.final.V
