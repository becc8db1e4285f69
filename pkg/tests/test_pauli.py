from __future__ import annotations

import itertools

import numpy as np
import pytest

from oracles import PAULI, central_difference, matrix_values, random_tree
from spsym.expr import ONE, X1, ZERO, const, phi_expr
from spsym.pauli import SIGMA, MatExpr, expand_M, levi_civita, mat_comm, mat_diff, mat_mul, numeric_matrices
from spsym.sampling import PointSample

S = PointSample.draw(50, seed=7, params={"kappa": 0.3})


def _random_mat(rng, depth=3) -> MatExpr:
    return MatExpr(tuple(random_tree(rng, depth) for _ in range(4)))


@pytest.mark.parametrize("a,b", list(itertools.product((1, 2, 3), repeat=2)))
def test_anticommutator_table_is_exact(a, b):
    anti = mat_mul(SIGMA[a], SIGMA[b]) + mat_mul(SIGMA[b], SIGMA[a])
    want = MatExpr.scalar(const(2)) if a == b else MatExpr.zero()
    assert anti.c == want.c


@pytest.mark.parametrize("a,b", list(itertools.product((1, 2, 3), repeat=2)))
def test_commutator_table_is_exact(a, b):
    comm = mat_comm(SIGMA[a], SIGMA[b])
    comps = [ZERO] * 4
    for c in (1, 2, 3):
        eps = levi_civita(a, b, c)
        if eps:
            comps[c] = const(2j * eps)
    assert comm.c == tuple(comps)


def test_numeric_matrices_reproduce_pauli():
    for k in range(4):
        vals = SIGMA[k].evaluate(S)
        np.testing.assert_array_equal(numeric_matrices(vals), np.broadcast_to(PAULI[k], (S.t.size, 2, 2)))


@pytest.mark.parametrize("seed", range(5))
def test_product_matches_explicit_matrices(seed):
    rng = np.random.default_rng(seed)
    A, B = _random_mat(rng), _random_mat(rng)
    got = matrix_values(mat_mul(A, B).evaluate(S))
    want = matrix_values(A.evaluate(S)) @ matrix_values(B.evaluate(S))
    np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("seed", range(5))
def test_commutator_matches_explicit_and_is_antisymmetric(seed):
    rng = np.random.default_rng(100 + seed)
    A, B = _random_mat(rng), _random_mat(rng)
    a, b = matrix_values(A.evaluate(S)), matrix_values(B.evaluate(S))
    got = matrix_values(mat_comm(A, B).evaluate(S))
    np.testing.assert_allclose(got, a @ b - b @ a, rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(matrix_values(mat_comm(B, A).evaluate(S)), -got, rtol=1e-12, atol=1e-12)


def test_sigma1_sigma2_commutator():
    assert mat_comm(SIGMA[1], SIGMA[2]).c == (ZERO, ZERO, ZERO, const(2j))


def test_matrix_derivative_matches_finite_difference():
    rng = np.random.default_rng(11)
    A = _random_mat(rng, 4)
    for v in ("t", "x2"):
        exact = mat_diff(A, v).evaluate(S)
        fd = np.stack([central_difference(c, v, S) for c in A.c])
        scale = 1 + np.max(np.abs(A.evaluate(S)))
        assert np.max(np.abs(exact - fd)) <= 1e-6 * max(scale, np.max(np.abs(exact)))


def test_M_macro():
    assert expand_M(0, X1).c == (ZERO, ONE, ZERO, ZERO)
    m = expand_M(1, phi_expr())
    vals = matrix_values(m.evaluate(S))
    phi = np.arctan2(S.x[:, 1], S.x[:, 0])
    want = np.cos(2 * phi)[:, None, None] * PAULI[1] + np.sin(2 * phi)[:, None, None] * PAULI[2]
    np.testing.assert_allclose(vals, want, atol=1e-14)
    # M squares to the identity
    sq = matrix_values(mat_mul(m, m).evaluate(S))
    np.testing.assert_allclose(sq, np.broadcast_to(PAULI[0], sq.shape), atol=1e-13)


def test_act_on_spinor_matches_matrix_vector_product():
    rng = np.random.default_rng(5)
    A = _random_mat(rng)
    u, w = random_tree(rng, 3), random_tree(rng, 3)
    out = A.act((u, w))
    got = np.stack([S.eval(out[0]), S.eval(out[1])], axis=1)
    vec = np.stack([S.eval(u), S.eval(w)], axis=1)
    want = np.einsum("nij,nj->ni", matrix_values(A.evaluate(S)), vec)
    np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-11)


def test_component_count_is_enforced():
    with pytest.raises(ValueError):
        MatExpr((ONE, ONE))
