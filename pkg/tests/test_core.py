import numpy as np
import pytest
from conftest import random_orthonormal

from nepv.core import (
    SubspaceIterate,
    constraint_jacobian,
    eval_A,
    eval_J,
    fixed_point_jacobian,
    lhs_map,
    residual,
    subspace_error,
)
from nepv.linalg import fd_jacobian, kron, vec
from nepv.problems import HeavisideTraceProblem, ScalarSineProblem
from nepv.analysis import jacobian_diagnostics


class _LinearProblem:
    """Constant ``A(V) = M``, a stand-in without analytic Jacobian."""

    has_analytic_jacobian = False
    is_basis_invariant = False

    def __init__(self, M, p):
        self.M, self.n, self.p = M, M.shape[0], p

    def A(self, V):
        return self.M


def test_eval_A_scalar_sine_oracles():
    prob = ScalarSineProblem(0.0)
    assert np.array_equal(eval_A(prob, np.ones(4)), prob.A0)
    prob = ScalarSineProblem(0.5)
    # entrywise sum of A2 is 8.4
    expected = prob.A0 + 0.5 * np.sin(8.4 / 4) * prob.A1
    assert np.allclose(eval_A(prob, np.ones(4) / 2), expected, atol=1e-15)


def test_eval_A_shape_and_orthonormality_checks(rng):
    prob = HeavisideTraceProblem(6, 2, 1.0)
    with pytest.raises(ValueError, match="shape"):
        eval_A(prob, rng.standard_normal((6, 3)))
    variant = _LinearProblem(np.eye(4), 2)
    with pytest.raises(ValueError, match="orthonormal"):
        eval_A(variant, 3 * np.eye(4)[:, :2])


def test_eval_J_errors():
    with pytest.raises(NotImplementedError):
        eval_J(_LinearProblem(np.eye(3), 1), np.ones(3))
    with pytest.raises(ValueError):
        eval_J(ScalarSineProblem(), np.zeros(4))


@pytest.mark.parametrize("prob", [ScalarSineProblem(0.0), HeavisideTraceProblem(6, 2, 0.0)])
def test_eval_J_linear_case(prob, rng):
    V = random_orthonormal(rng, prob.n, prob.p)
    assert np.allclose(eval_J(prob, vec(V)), kron(np.eye(prob.p), prob.A0), atol=1e-14)


def test_residual_identities(rng):
    prob = HeavisideTraceProblem(8, 3, 1.0)
    V = random_orthonormal(rng, 8, 3)
    A = prob.A(V)
    r = residual(prob, SubspaceIterate(V, V.T @ A @ V))
    assert np.linalg.norm(r.block2) <= 1e-14
    assert np.allclose(r.block1, vec((np.eye(8) - V @ V.T) @ A @ V), atol=1e-13)

    lin = prob.with_alpha(0.0)
    w, Q = np.linalg.eigh(lin.A0)
    assert residual(lin, SubspaceIterate(Q[:, :3], np.diag(w[:3]))).norm <= 1e-10


def test_residual_invariant_under_diagonalization(rng):
    lin = HeavisideTraceProblem(8, 3, 0.0)
    w, Q = np.linalg.eigh(lin.A0)
    P = random_orthonormal(rng, 3, 3)
    V, S = Q[:, :3] @ P, P.T @ np.diag(w[:3]) @ P
    assert residual(lin, SubspaceIterate(V, S)).norm <= 1e-10
    lam, Qs = np.linalg.eigh(S)
    assert residual(lin, SubspaceIterate(V @ Qs, np.diag(lam))).norm <= 1e-10


def test_constraint_jacobian_identity(rng):
    V = random_orthonormal(rng, 7, 3)
    W = rng.standard_normal((7, 3))
    assert np.linalg.norm(constraint_jacobian(V) @ vec(W) - vec(W.T @ V + V.T @ W)) <= 1e-12
    v = random_orthonormal(rng, 5, 1)
    assert np.allclose(constraint_jacobian(v), 2 * v.T)


def test_fixed_point_jacobian_blocks(rng):
    prob = ScalarSineProblem(0.5)
    v = random_orthonormal(rng, 4, 1)
    it = SubspaceIterate(v, v.T @ prob.A(v) @ v)
    F = fixed_point_jacobian(prob, it)
    assert F.matrix.shape == (5, 5)
    assert np.allclose(F.block21, 2 * v.T)
    assert np.allclose(F.block12, -v)
    assert np.allclose(F.block11, prob.J(v[:, 0]) - it.S[0, 0] * np.eye(4))


def test_fixed_point_jacobian_matches_fd_of_residual(rng):
    prob = HeavisideTraceProblem(5, 2, 0.7)
    V = random_orthonormal(rng, 5, 2)
    S = rng.standard_normal((2, 2))
    S = S + S.T
    F = fixed_point_jacobian(prob, SubspaceIterate(V, S))

    def full(x):
        Vx, Sx = x[:10].reshape(5, 2, order="F"), x[10:].reshape(2, 2, order="F")
        r = residual(prob, SubspaceIterate(Vx, Sx))
        return np.concatenate([r.block1, r.block2])

    fd = fd_jacobian(full, np.concatenate([vec(V), vec(S)]))
    assert np.linalg.norm(F.matrix - fd) <= 1e-6 * np.linalg.norm(fd)


def test_fixed_point_jacobian_fd_fallback():
    M = np.diag([1.0, 2.0, 3.0])
    v = np.eye(3)[:, :1]
    F = fixed_point_jacobian(_LinearProblem(M, 1), SubspaceIterate(v, [[1.0]]))
    assert np.allclose(F.block11, M - np.eye(3), atol=1e-8)


def test_subspace_error_metric(rng):
    V = random_orthonormal(rng, 6, 2)
    P = random_orthonormal(rng, 2, 2)
    assert subspace_error(V, V) == 0.0
    assert subspace_error(V, V @ P) <= 1e-12
    v = random_orthonormal(rng, 6, 1)
    assert subspace_error(-v, v) == 0.0
    W = random_orthonormal(rng, 6, 2)
    assert subspace_error(V, W) == pytest.approx(subspace_error(W, V))
    assert subspace_error(V, W) > 0.1


def test_lhs_map(rng):
    prob = HeavisideTraceProblem(6, 2, 1.0)
    V = random_orthonormal(rng, 6, 2)
    assert np.allclose(lhs_map(prob)(vec(V)), kron(np.eye(2), prob.A(V)) @ vec(V))


def test_jacobian_diagnostics_linear_distinct_and_degenerate():
    lin = ScalarSineProblem(0.0)
    w, Q = np.linalg.eigh(lin.A0)
    rep = jacobian_diagnostics(lin, SubspaceIterate(Q[:, :1], [[w[0]]]))
    assert not rep.near_singular and rep.smallest_singular_value > 1e-3

    degenerate = _LinearProblem(np.diag([1.0, 1.0, 2.0]), 1)
    rep = jacobian_diagnostics(degenerate, SubspaceIterate(np.eye(3)[:, :1], [[1.0]]))
    assert rep.near_singular


def test_jacobian_diagnostics_requires_solution(rng):
    prob = ScalarSineProblem(0.5)
    v = random_orthonormal(rng, 4, 1)
    with pytest.raises(ValueError, match="not a solution"):
        jacobian_diagnostics(prob, SubspaceIterate(v, [[0.0]]))
