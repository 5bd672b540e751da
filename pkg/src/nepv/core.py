"""Problem abstraction for eigenvector-dependent eigenvalue problems.

A problem provides a symmetric matrix ``A(V)`` for ``V`` in ``R^{n x p}``.
We look for ``V`` with orthonormal columns and a symmetric ``S`` with
``A(V) V = V S``.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import fd_jacobian, kron, shuffle_matrix, vec, unvec

__all__ = [
    "NepvProblem",
    "SubspaceIterate",
    "ResidualValue",
    "FixedPointJacobian",
    "as_basis",
    "orth_defect",
    "eval_A",
    "eval_J",
    "lhs_map",
    "residual",
    "constraint_jacobian",
    "fixed_point_jacobian",
    "subspace_error",
]


def as_basis(V):
    """Return ``V`` as a 2-D float array; vectors become a single column."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    return V


def orth_defect(V):
    V = as_basis(V)
    return float(np.linalg.norm(V.T @ V - np.eye(V.shape[1])))


class NepvProblem:
    """Base class for a matrix-valued map ``V -> A(V)``.

    Subclasses implement :meth:`A`, and optionally :meth:`J` (the Jacobian
    of ``v -> (I_p kron A(V)) v``). The split ``A(V) = A0 + alpha C(V)``
    is exposed through :attr:`A0` and :meth:`C` for the single-step study.
    """

    has_analytic_jacobian = False
    is_basis_invariant = True
    name = "nepv"

    n: int
    p: int
    alpha: float

    def A(self, V):
        raise NotImplementedError

    def J(self, v):
        raise NotImplementedError(f"{type(self).__name__} has no analytic Jacobian")

    @property
    def A0(self):
        raise NotImplementedError

    def C(self, V):
        """Nonlinear part with unit strength, ``(A(V) - A0) / alpha``."""
        raise NotImplementedError

    def dCv(self, v):
        """Jacobian of ``v -> C(v) v``; finite differences unless overridden."""
        if self.p != 1:
            raise NotImplementedError("dCv is defined for p = 1 only")
        return fd_jacobian(lambda x: self.C(x) @ x, np.asarray(v, dtype=float))

    def with_alpha(self, alpha):
        """Copy of this problem with a different nonlinearity strength."""
        raise NotImplementedError


def _check_shape(problem, V):
    if V.shape != (problem.n, problem.p):
        raise ValueError(f"expected V of shape {(problem.n, problem.p)}, got {V.shape}")


def eval_A(problem, V):
    """Evaluate ``A(V)``; basis-variant problems only accept orthonormal ``V``."""
    V = as_basis(V)
    _check_shape(problem, V)
    if not problem.is_basis_invariant and orth_defect(V) > 1e-8:
        raise ValueError("V must be orthonormal for a basis-variant problem")
    return problem.A(V)


def eval_J(problem, v):
    v = np.asarray(v, dtype=float).ravel()
    if not problem.has_analytic_jacobian:
        raise NotImplementedError(
            f"{type(problem).__name__} has no analytic Jacobian; use fd_jacobian(lhs_map(problem), v)"
        )
    if not np.any(v):
        raise ValueError("J is undefined at v = 0")
    return problem.J(v)


def lhs_map(problem):
    """The map ``v -> (I_p kron A(V)) v = vec(A(V) V)``."""

    def f(v):
        V = unvec(v, problem.n, problem.p)
        return vec(problem.A(V) @ V)

    return f


@dataclass
class SubspaceIterate:
    """Orthonormal basis ``V`` (n x p) with its companion block ``S`` (p x p)."""

    V: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        self.V = as_basis(self.V)
        self.S = np.atleast_2d(np.asarray(self.S, dtype=float))

    @property
    def v(self):
        return vec(self.V)

    @property
    def s(self):
        return vec(self.S)

    def check(self, tol=1e-10):
        if orth_defect(self.V) > tol:
            raise ValueError("V is not orthonormal")
        if np.linalg.norm(self.S - self.S.T) > tol * max(1.0, np.linalg.norm(self.S)):
            raise ValueError("S is not symmetric")
        return self


@dataclass
class ResidualValue:
    block1: np.ndarray
    block2: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self):
        self.norm = float(np.sqrt(self.block1 @ self.block1 + self.block2 @ self.block2))


def residual(problem, iterate):
    """Residual of the vectorized system: ``vec(A(V)V - VS)`` and ``vec(V^T V - I)``."""
    V, S = iterate.V, iterate.S
    AV = problem.A(V) @ V
    return ResidualValue(vec(AV - V @ S), vec(V.T @ V - np.eye(V.shape[1])))


def constraint_jacobian(V):
    """Derivative of ``v -> vec(V^T V)``: maps ``vec(W)`` to ``vec(W^T V + V^T W)``."""
    V = as_basis(V)
    p = V.shape[1]
    return (np.eye(p * p) + shuffle_matrix(p)) @ kron(np.eye(p), V.T)


@dataclass
class FixedPointJacobian:
    """Bordered Jacobian ``[[J - S^T kron I, -I kron V], [Z, 0]]``."""

    matrix: np.ndarray
    n: int
    p: int

    @property
    def block11(self):
        m = self.n * self.p
        return self.matrix[:m, :m]

    @property
    def block12(self):
        m = self.n * self.p
        return self.matrix[:m, m:]

    @property
    def block21(self):
        m = self.n * self.p
        return self.matrix[m:, :m]

    def singular_values(self):
        return np.linalg.svd(self.matrix, compute_uv=False)

    @property
    def smallest_singular_value(self):
        return float(self.singular_values()[-1])


def fixed_point_jacobian(problem, iterate, J=None):
    """Assemble the Jacobian of the vectorized residual at ``iterate``.

    ``J`` defaults to the analytic Jacobian, or a finite-difference one when
    the problem does not provide it.
    """
    V, S = iterate.V, iterate.S
    n, p = V.shape
    if J is None:
        if problem.has_analytic_jacobian:
            J = problem.J(vec(V))
        else:
            J = fd_jacobian(lhs_map(problem), vec(V))
    m = n * p
    M = np.zeros((m + p * p, m + p * p))
    M[:m, :m] = J - kron(S.T, np.eye(n))
    M[:m, m:] = -kron(np.eye(p), V)
    M[m:, :m] = constraint_jacobian(V)
    return FixedPointJacobian(M, n, p)


def subspace_error(V, V_ref):
    """Distance between iterates.

    For vectors this is the sign-aligned Euclidean distance, otherwise the
    Frobenius distance between the orthogonal projectors.
    """
    V, V_ref = as_basis(V), as_basis(V_ref)
    if V.shape != V_ref.shape:
        raise ValueError(f"shape mismatch {V.shape} vs {V_ref.shape}")
    if V.shape[1] == 1:
        v, r = V[:, 0], V_ref[:, 0]
        return float(min(np.linalg.norm(v - r), np.linalg.norm(v + r)))
    return float(np.linalg.norm(V @ V.T - V_ref @ V_ref.T))
