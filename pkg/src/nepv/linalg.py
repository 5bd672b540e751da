"""Dense linear-algebra kernel.

Column-major vectorization is used throughout so that the identity
``vec(B X A^T) = kron(A, B) vec(X)`` holds.
"""

import numpy as np

__all__ = [
    "RANK_EPS",
    "SymEig",
    "vec",
    "unvec",
    "kron",
    "shuffle_matrix",
    "sym_eig",
    "thin_qr",
    "lstsq",
    "heaviside_psd",
    "projector_frechet",
    "fd_jacobian",
]

# relative threshold (w.r.t. the spectral norm) below which an eigenvalue
# counts as zero in heaviside_psd
RANK_EPS = 1e-8


class SymEig:
    """Eigendecomposition ``M = Q diag(w) Q^T`` with ``w`` ascending."""

    __slots__ = ("eigenvalues", "eigenvectors")

    def __init__(self, eigenvalues, eigenvectors):
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors

    def reconstruct(self):
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def vec(M):
    """Stack the columns of ``M`` into one vector."""
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"vec expects a 2-D array, got shape {M.shape}")
    return M.reshape(-1, order="F")


def unvec(x, rows, cols):
    x = np.asarray(x)
    if x.ndim != 1 or x.size != rows * cols:
        raise ValueError(f"cannot reshape vector of size {x.size} to ({rows}, {cols})")
    return x.reshape((rows, cols), order="F")


def kron(A, B):
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def shuffle_matrix(n):
    """Permutation ``P`` of size ``n^2`` with ``P vec(W^T) = vec(W)``.

    ``P`` is symmetric and an involution.
    """
    if n < 1:
        raise ValueError("n must be positive")
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    P = np.zeros((n * n, n * n))
    # vec(W)[i + n j] = W[i, j] = vec(W^T)[j + n i]
    P[(i + n * j).ravel(), (j + n * i).ravel()] = 1.0
    return P


def _check_finite(M, name="matrix"):
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")


def sym_eig(M):
    """Symmetric eigendecomposition with eigenvalues sorted ascending.

    ``M`` is symmetrized as ``(M + M^T)/2`` before factorizing; an input
    whose asymmetry exceeds ``1e-10 ||M||_F`` is rejected.
    """
    M = np.asarray(M, dtype=float)
    _check_finite(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    w, Q = np.linalg.eigh(0.5 * (M + M.T))
    return SymEig(w, Q)


def thin_qr(Y):
    """Thin QR factorization with a positive diagonal in ``R``.

    Returns
    -------
    Q : ndarray, shape (n, p)
        Orthonormal columns.
    R : ndarray, shape (p, p)
        Upper triangular, positive diagonal.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = Y.shape
    if n < p:
        raise ValueError(f"thin QR needs n >= p, got {Y.shape}")
    _check_finite(Y)
    sv = np.linalg.svd(Y, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0] or sv[0] == 0.0:
        raise np.linalg.LinAlgError("matrix is rank deficient")
    Q, R = np.linalg.qr(Y, mode="reduced")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return Q * signs, R * signs[:, None]


def lstsq(A, b):
    """Minimum-norm least squares solution of ``A x = b``."""
    return np.linalg.lstsq(np.asarray(A, dtype=float), np.asarray(b, dtype=float), rcond=None)[0]


def heaviside_psd(M, eps=RANK_EPS):
    """Matrix heaviside function of a symmetric positive semidefinite matrix.

    Eigenvalues above ``eps * ||M||_2`` are mapped to one and the rest to
    zero, so for ``M = W W^T`` with ``W`` of full column rank the result is
    the orthogonal projector onto ``range(W)``.
    """
    w, Q = sym_eig(M)
    norm2 = max(abs(w[0]), abs(w[-1]))
    if w[0] < -1e-10 * norm2:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {w[0]:.3e})")
    Qp = Q[:, w > eps * norm2]
    return Qp @ Qp.T


def projector_frechet(V, E):
    """Frechet derivative of the (shifted) heaviside function at ``V V^T``.

    ``V`` must have orthonormal columns. The derivative applied to ``E`` is
    ``(I - V V^T) E V V^T + V V^T E (I - V V^T)``.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    Pi = V @ V.T
    Q = np.eye(V.shape[0]) - Pi
    return Q @ E @ Pi + Pi @ E @ Q


def fd_jacobian(f, x, h=1e-6):
    """Central-difference Jacobian of ``f`` at ``x``."""
    if h <= 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    Jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        step = np.zeros_like(x)
        step[j] = h
        fp = np.asarray(f(x + step), dtype=float)
        fm = np.asarray(f(x - step), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise ValueError(f"function returned non-finite values along direction {j}")
        Jac[:, j] = (fp - fm) / (2.0 * h)
    return Jac
