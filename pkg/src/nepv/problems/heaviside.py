"""Subspace problem ``A(V) = A0 + alpha diag(A0^{-1} diag(h(V V^T)))``.

``A0`` is the unscaled 1-D Laplacian ``tridiag(-1, 2, -1)`` and ``h`` the
matrix heaviside function, so ``A(V)`` only depends on ``range(V)``.
"""

import numpy as np

from ..core import NepvProblem, as_basis, orth_defect
from ..linalg import heaviside_psd, kron, projector_frechet, shuffle_matrix, vec, unvec

__all__ = ["HeavisideTraceProblem", "laplacian_1d"]


def laplacian_1d(n):
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


class HeavisideTraceProblem(NepvProblem):
    """
    Parameters
    ----------
    n, p : int
        Ambient and subspace dimension, ``1 <= p < n``.
    alpha : float
        Nonlinearity strength.
    """

    has_analytic_jacobian = True
    is_basis_invariant = True
    name = "heaviside"

    def __init__(self, n, p, alpha):
        if not 1 <= p < n:
            raise ValueError(f"need 1 <= p < n, got n={n}, p={p}")
        self.n = int(n)
        self.p = int(p)
        self.alpha = float(alpha)
        self._A0 = laplacian_1d(self.n)
        # column i of G gives the diagonal of the coefficient matrix A_i
        self.G = np.linalg.inv(self._A0)

    @property
    def A0(self):
        return self._A0

    def with_alpha(self, alpha):
        return HeavisideTraceProblem(self.n, self.p, alpha)

    def projector(self, V):
        V = as_basis(V)
        if V.shape != (self.n, self.p):
            raise ValueError(f"expected V of shape {(self.n, self.p)}, got {V.shape}")
        Pi = heaviside_psd(V @ V.T)
        if round(np.trace(Pi)) != self.p:
            raise ValueError("V must have full column rank")
        return Pi

    def C(self, V):
        rho = np.diag(self.projector(V))
        return np.diag(self.G @ rho)

    def A(self, V):
        return self._A0 + self.alpha * self.C(V)

    def coefficient_matrices(self):
        """The matrices ``A_i = alpha diag(A0^{-1} e_i)``, stacked along axis 0."""
        return self.alpha * np.stack([np.diag(self.G[:, i]) for i in range(self.n)])

    def _orthonormal(self, v):
        V = unvec(np.asarray(v, dtype=float), self.n, self.p)
        if orth_defect(V) > 1e-8:
            raise ValueError("the analytic Jacobian requires orthonormal V")
        return V

    def J(self, v):
        V = self._orthonormal(v)
        n, p = self.n, self.p
        Q = np.eye(n) - V @ V.T
        # d rho_i / d V[k, m] = 2 Q[i, k] V[i, m]
        drho = 2.0 * (Q[:, :, None] * V[:, None, :]).reshape(n, n * p, order="F")
        Gd = self.G @ drho
        lower = np.vstack([V[:, [m]] * Gd for m in range(p)])
        return kron(np.eye(p), self.A(V)) + self.alpha * lower

    def J_naive(self, v):
        """Literal assembly through Frechet derivatives over all ``E_{k,l}``.

        Slow (``O(n^5)``); kept as a cross-check of :meth:`J`.
        """
        V = self._orthonormal(v)
        n, p = self.n, self.p
        I = np.eye(n)
        lg_rows = np.zeros((n, n * n))
        for col in range(n * n):
            k, l = col % n, col // n
            E = np.zeros((n, n))
            E[k, l] = 1.0
            lg_rows[:, col] = np.diag(projector_frechet(V, E))
        coeffs = self.coefficient_matrices()
        total = sum(np.outer(vec(coeffs[i] @ V), lg_rows[i]) for i in range(n))
        dvvt = (np.eye(n * n) + shuffle_matrix(n)) @ kron(V, I)
        return kron(np.eye(p), self.A(V)) + total @ dvvt
