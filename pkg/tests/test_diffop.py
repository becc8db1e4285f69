from __future__ import annotations

import numpy as np
import pytest

from oracles import random_tree
from spsym.diffop import (DiffOp, OrderOverflow, ProjectionError, as_diffop, commutator, project,
                          schrodinger_operator, structured_form)
from spsym.expr import I_UNIT, X1, X2, X3, T, ExprError, const, r2_expr
from spsym.generators import A, D, G, L, M, P, P0, B_trig, Bh_trig, schrodinger_basis
from spsym.pauli import MatExpr
from spsym.sampling import PointSample

S20 = PointSample.draw(20, seed=13, params={"kappa": 0.7})


def op_residual(a: DiffOp, b: DiffOp, sample=S20) -> float:
    diff = a - b
    if diff.is_zero():
        return 0.0
    return float(np.max(np.abs(diff.evaluate(sample))))


def psq() -> DiffOp:
    return sum((P(a).compose(P(a)) for a in (1, 2, 3)), DiffOp.zero())


def _random_generator(rng) -> DiffOp:
    """First-order operator with scalar derivative coefficients and a matrix potential term."""
    op = DiffOp.partial("t", random_tree(rng, 2))
    for v in ("x1", "x2", "x3"):
        op = op + DiffOp.partial(v, random_tree(rng, 2))
    return op + MatExpr(tuple(random_tree(rng, 2) for _ in range(4)))


def test_compose_with_multiplication():
    d1 = DiffOp.partial("x1")
    want = DiffOp.partial("x1", X1) + as_diffop(1)
    assert op_residual(d1.compose(as_diffop(X1)), want) == 0.0


def test_M12_P1_commutator():
    assert op_residual(commutator(M(1, 2), P(1)), P(2).scale(I_UNIT)) < 1e-14


@pytest.mark.parametrize("a,b", [(1, 2), (2, 3), (3, 1), (1, 3)])
def test_momentum_boost_identity(a, b):
    lhs = P(a).compose(G(b)) - P(b).compose(G(a))
    assert op_residual(lhs, M(a, b)) < 1e-10


def test_dilation_quadratic_identity():
    lhs = sum((P(a).compose(G(a)) + G(a).compose(P(a)) for a in (1, 2, 3)), DiffOp.zero())
    rhs = D().scale(2) + (psq() - P0().scale(2)).scale(2 * T)
    assert op_residual(lhs, rhs) < 1e-10


def test_conformal_quadratic_identity():
    lhs = sum((G(a).compose(G(a)) for a in (1, 2, 3)), DiffOp.zero())
    rhs = A().scale(2) + (psq() - P0().scale(2)).scale(T * T)
    assert op_residual(lhs, rhs) < 1e-10


def test_composition_acts_like_sequential_application():
    rng = np.random.default_rng(21)
    s = PointSample.draw(15, seed=2, params={"kappa": 0.7})
    for k in range(10):
        a, b = _random_generator(rng), _random_generator(rng)
        psi = (random_tree(rng, 3), random_tree(rng, 3))
        seq = a.apply(b.apply(psi))
        comp = a.compose(b).apply(psi)
        for x, y in zip(seq, comp):
            vx, vy = s.eval(x), s.eval(y)
            scale = 1 + np.max(np.abs(vx))
            assert np.max(np.abs(vx - vy)) <= 1e-9 * scale, k


def test_mixed_second_order_coefficient():
    op = DiffOp.partial("x1").compose(DiffOp.partial("x2", X1))
    # d1 x1 d2 = x1 d1 d2 + d2
    want = DiffOp({(0, 1, 1, 0): MatExpr.scalar(X1)}) + DiffOp.partial("x2")
    assert op_residual(op, want) == 0.0
    psi = (X1 * X1 * X2 * X3, X2 * X2 * X1)
    s = PointSample.draw(10, seed=4)
    seq = DiffOp.partial("x1").apply(DiffOp.partial("x2", X1).apply(psi))
    for g, q in zip(op.apply(psi), seq):
        np.testing.assert_allclose(s.eval(g), s.eval(q), rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_jacobi_identity_random_generators(seed):
    rng = np.random.default_rng(300 + seed)
    a, b, c = (_random_generator(rng) for _ in range(3))
    jac = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b))
    terms = [commutator(a, commutator(b, c)), commutator(b, commutator(c, a))]
    scale = 1 + max(float(np.max(np.abs(t.evaluate(S20)))) for t in terms if not t.is_zero())
    assert op_residual(jac, DiffOp.zero()) <= 1e-9 * scale


def test_commutator_is_antisymmetric():
    rng = np.random.default_rng(8)
    a, b = _random_generator(rng), _random_generator(rng)
    assert op_residual(commutator(a, b), -commutator(b, a)) < 1e-10


def test_projection_recovers_coefficients():
    target = P(1) + G(1).scale(2j)
    pr = project(target, [P(1), G(1)], S20)
    np.testing.assert_allclose(pr.as_list(), [1, 2j], atol=1e-12)
    assert pr.residual < 1e-12


def test_projection_detects_dependent_basis():
    with pytest.raises(ProjectionError) as info:
        project(P(1), [P(1), P(2), P(1).scale(3)], S20)
    assert set(info.value.degenerate) == {0, 2}


def test_P0_B_relation():
    w = const(1.3)
    lhs = commutator(P0(), B_trig(3, w))
    assert op_residual(lhs, Bh_trig(3, w).scale(1.3j)) < 1e-12


def test_schrodinger_basis_commutes_with_free_operator_up_to_multiple():
    Lop = schrodinger_operator(0)
    for g in schrodinger_basis():
        c = commutator(g.op, Lop)
        if c.is_zero():
            continue
        # [Q, L] must be a function of t times L
        ratio = c.ct().scalar_part
        assert op_residual(c, Lop.scale(ratio * -I_UNIT)) < 1e-10, g.name


def test_angular_momentum_algebra():
    assert op_residual(commutator(L(1), L(2)), L(3).scale(I_UNIT)) < 1e-12


def test_structured_form_round_trip():
    op = D() + MatExpr.sigma(3, X1 * T)
    sf = structured_form(op)
    assert op_residual(sf.to_diffop(), op) < 1e-13
    # alpha from the structured form is the multiplier in [D, L] = alpha L
    Lop = schrodinger_operator(0)
    assert op_residual(commutator(D(), Lop), Lop.scale(structured_form(D()).alpha)) < 1e-12


def test_structured_form_rejects_matrix_derivative_coefficients():
    with pytest.raises(ExprError):
        structured_form(DiffOp.partial("x1", MatExpr.sigma(1)))


def test_order_overflow():
    d3 = DiffOp.partial("x1").compose(DiffOp.partial("x1")).compose(DiffOp.partial("x2"))
    with pytest.raises(OrderOverflow):
        d3.compose(DiffOp.partial("x3"))


def test_free_operator_coefficients():
    Lop = schrodinger_operator(r2_expr())
    np.testing.assert_allclose(Lop.ct().evaluate(S20)[0], 1j)
    np.testing.assert_allclose(Lop.cab(2, 2).evaluate(S20)[0], 0.5)
    np.testing.assert_allclose(Lop.c0().evaluate(S20)[0], -np.sum(S20.x ** 2, axis=1))
