"""Four-dimensional test problem ``A(v) = A0 + alpha sin(v^T A2 v / v^T v) A1``."""

import dataclasses

import numpy as np

from ..core import NepvProblem

_A0 = np.array([
    [10, 21, 13, 16],
    [21, -26, 24, 2],
    [13, 24, -26, 37],
    [16, 2, 37, -4],
]) / 10.0

_A1 = np.array([
    [20, 28, 12, 32],
    [28, 4, 14, 6],
    [12, 14, 32, 34],
    [32, 6, 34, 16],
]) / 10.0

_A2 = np.array([
    [-14, 16, -4, 15],
    [16, 10, 15, -9],
    [-4, 15, 16, 6],
    [15, -9, 6, -6],
]) / 10.0


def _as_vector(v):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape != (4,):
        raise ValueError(f"expected a vector of length 4, got shape {v.shape}")
    if not np.any(v):
        raise ValueError("v must be nonzero")
    return v


@dataclasses.dataclass(frozen=True)
class ScalarSineProblem(NepvProblem):
    alpha: float = 0.5

    n = 4
    p = 1
    has_analytic_jacobian = True
    is_basis_invariant = True
    name = "scalar_sine"

    A1 = _A1
    A2 = _A2

    @property
    def A0(self):
        return _A0

    def _quotient(self, v):
        return (v @ self.A2 @ v) / (v @ v)

    def C(self, V):
        v = _as_vector(V)
        return np.sin(self._quotient(v)) * self.A1

    def A(self, V):
        return _A0 + self.alpha * self.C(V)

    def dCv(self, v):
        v = _as_vector(v)
        vv = v @ v
        q = v @ self.A2 @ v
        grad = 2.0 * np.cos(q / vv) / vv**2 * (vv * (self.A2 @ v) - q * v)
        return np.sin(q / vv) * self.A1 + np.outer(self.A1 @ v, grad)

    def J(self, v):
        return _A0 + self.alpha * self.dCv(v)

    def with_alpha(self, alpha):
        return dataclasses.replace(self, alpha=alpha)
