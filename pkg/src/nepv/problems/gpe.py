"""Rotating Bose-Einstein condensate in a box, discretized by central differences.

The complex wave function on the ``N x N`` interior grid is written as
``psi = v1 + i v2`` and the problem is posed for the real vector
``v = (v1, v2)`` of length ``2 N^2``. Grid points are ordered with the
x-index running fastest, so ``psi[i + N j]`` lives at ``(x_i, y_j)``.
"""

import re

import numpy as np
import scipy.sparse as sp

from ..core import NepvProblem

__all__ = ["GpeProblem", "build_gpe", "harmonic_potential", "load_potential_csv", "save_potential_csv"]


def grid(N, L):
    """Interior grid points and spacing for ``N + 2`` points on ``[-L, L]``."""
    dx = 2.0 * L / (N + 1)
    return -L + dx * np.arange(1, N + 1), dx


def harmonic_potential(N, L):
    """``V(x, y) = (x^2 + y^2) / 2`` sampled as ``V[i, j] = V(x_i, y_j)``."""
    x, _ = grid(N, L)
    return 0.5 * (x[:, None] ** 2 + x[None, :] ** 2)


def _linear_operator(N, L, Omega, potential):
    x, dx = grid(N, L)
    I = sp.identity(N, format="csr")
    T = sp.diags([-np.ones(N - 1), 2 * np.ones(N), -np.ones(N - 1)], [-1, 0, 1]) / dx**2
    D = sp.diags([-np.ones(N - 1), np.ones(N - 1)], [-1, 1]) / (2 * dx)
    X = sp.diags(x)
    lap = sp.kron(I, T) + sp.kron(T, I)
    # y d/dx - x d/dy, antisymmetric
    rot = sp.kron(X, D) - sp.kron(D, X)
    pot = sp.diags(np.asarray(potential, dtype=float).reshape(-1, order="F"))
    re_part = (0.5 * lap + pot).toarray()
    im_part = (-Omega * rot).toarray()
    return re_part, im_part


class GpeProblem(NepvProblem):
    """Realified discretization with ``A(v) = A0 + (gamma / v^T v) B(v)``.

    ``B(v) = blockdiag(D, D)`` with ``D = diag(v1^2 + v2^2)`` and
    ``gamma = b / dx^2``. :attr:`alpha` is the interaction strength ``b``.
    """

    has_analytic_jacobian = True
    is_basis_invariant = True
    name = "gpe"
    p = 1

    def __init__(self, N, L, Omega, b, potential=None):
        if N < 3:
            raise ValueError("N must be at least 3")
        if L <= 0:
            raise ValueError("L must be positive")
        self.N = int(N)
        self.L = float(L)
        self.Omega = float(Omega)
        self.b = float(b)
        self.potential = harmonic_potential(N, L) if potential is None else np.asarray(potential, float)
        if self.potential.shape != (N, N):
            raise ValueError(f"potential must have shape {(N, N)}, got {self.potential.shape}")
        self.x, self.dx = grid(self.N, self.L)
        self.gamma = self.b / self.dx**2
        self.n = 2 * self.N**2
        self.A0_re, self.A0_im = _linear_operator(self.N, self.L, self.Omega, self.potential)
        self._A0 = np.block([[self.A0_re, -self.A0_im], [self.A0_im, self.A0_re]])

    @property
    def alpha(self):
        return self.b

    @property
    def A0(self):
        return self._A0

    def complex_A0(self):
        return self.A0_re + 1j * self.A0_im

    def with_alpha(self, alpha):
        return GpeProblem(self.N, self.L, self.Omega, alpha, self.potential)

    def _split(self, v):
        v = np.asarray(v, dtype=float).reshape(-1)
        if v.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}, got shape {v.shape}")
        if not np.any(v):
            raise ValueError("v must be nonzero")
        m = self.N**2
        return v, v[:m], v[m:]

    def density(self, v):
        _, v1, v2 = self._split(v)
        return v1**2 + v2**2

    def C(self, V):
        v, v1, v2 = self._split(V)
        rho = v1**2 + v2**2
        return np.diag(np.concatenate([rho, rho])) / (self.dx**2 * (v @ v))

    def A(self, V):
        v, v1, v2 = self._split(V)
        rho = v1**2 + v2**2
        A = self._A0.copy()
        A[np.diag_indices(self.n)] += self.gamma / (v @ v) * np.concatenate([rho, rho])
        return A

    def _nonlinear_jacobian(self, v, gamma):
        v, v1, v2 = self._split(v)
        vv = v @ v
        m = self.N**2
        rho = v1**2 + v2**2
        Bv = np.concatenate([rho * v1, rho * v2])
        Jac = -(2.0 * gamma / vv**2) * np.outer(Bv, v)
        idx = np.arange(m)
        c = gamma / vv
        Jac[idx, idx] += c * (3 * v1**2 + v2**2)
        Jac[idx + m, idx + m] += c * (v1**2 + 3 * v2**2)
        Jac[idx, idx + m] += c * 2 * v1 * v2
        Jac[idx + m, idx] += c * 2 * v1 * v2
        return Jac

    def J(self, v):
        return self._A0 + self._nonlinear_jacobian(v, self.gamma)

    def dCv(self, v):
        return self._nonlinear_jacobian(v, 1.0 / self.dx**2)


def build_gpe(N, L, Omega, b, potential=None):
    return GpeProblem(N, L, Omega, b, potential)


_HEADER = re.compile(r"#\s*gpe-potential\s+N=(\d+)\s+L=([0-9eE+.\-]+)")


def load_potential_csv(path):
    """Read a grid potential file.

    The first line is ``# gpe-potential N=<n> L=<l>``; it is followed by
    ``N`` rows of ``N`` comma-separated values, row ``i`` holding
    ``V(x_i, y_0), ..., V(x_i, y_{N-1})``.

    Returns
    -------
    potential : ndarray, shape (N, N)
    N : int
    L : float
    """
    with open(path) as fh:
        header = fh.readline()
        m = _HEADER.match(header.strip())
        if m is None:
            raise ValueError(f"{path}: missing '# gpe-potential N=<n> L=<l>' header")
        N, L = int(m.group(1)), float(m.group(2))
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    if values.shape != (N, N):
        raise ValueError(f"{path}: expected {N}x{N} values, found {values.shape}")
    return values, N, L


def save_potential_csv(path, potential, L):
    potential = np.asarray(potential, dtype=float)
    N = potential.shape[0]
    with open(path, "w") as fh:
        fh.write(f"# gpe-potential N={N} L={L!r}\n")
        for row in potential:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
