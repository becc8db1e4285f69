from __future__ import annotations

import numpy as np
import pytest

from spsym import corpus
from spsym.detsys import (EQUATIONS, SymmetryCandidate, VerifyConfig, check_consequences, profile_class,
                          residuals_structured, verify_operator)
from spsym.diffop import as_diffop
from spsym.expr import T, X1, X3, const, cos, param, r2_expr, sin
from spsym.generators import P, make_basis_generator, schrodinger_basis
from spsym.parsing import parse, parse_pauli
from spsym.pauli import MatExpr
from spsym.sampling import PointSample

CFG = VerifyConfig(samples=15, seed=5)


@pytest.mark.parametrize("name", [g.name for g in schrodinger_basis()])
def test_free_particle_generators_verify(name):
    rep = verify_operator(0, make_basis_generator(name).op, CFG)
    assert rep.passed, rep.residuals
    assert set(EQUATIONS) <= set(rep.residuals)


def test_non_symmetry_fails_everywhere():
    rep = verify_operator(0, P(1).scale(X1), CFG)
    assert not rep.passed
    assert rep.residuals["commutator"] > 1e-3
    assert rep.residuals["action"] > 1e-3
    assert max(rep.residuals[e] for e in EQUATIONS) > 1e-3


def test_printed_conformal_sign_fails():
    assert not verify_operator(0, make_basis_generator("Aprinted").op, CFG).passed


def test_residuals_are_scale_invariant():
    V = parse_pauli("1.7/r^2")
    for c in (1e-3, 1.0, 1e4):
        rep = verify_operator(V, make_basis_generator("A").op.scale(c), CFG)
        assert rep.passed
    bad = [verify_operator(V, make_basis_generator("G1").op.scale(c), CFG).residuals["commutator"]
           for c in (1e-3, 1.0, 1e4)]
    assert max(bad) / min(bad) < 1 + 1e-9
    assert min(bad) > 0.1


def test_structured_and_commutator_agree_on_corpus():
    """Each corpus generator passes, and a perturbed copy fails, under both formulations."""
    cfg = VerifyConfig(samples=10, seed=3, test_functions=1)
    count = 0
    for row in corpus.load():
        _, params = row.branches()[0]
        V, table, phs = row.build(params)
        cfg.params = table
        for _, op in row.generators(params, phs):
            for Q, expect in ((op, True), (op + MatExpr.sigma(1, X3 * T), False)):
                res = verify_operator(V, Q, cfg).residuals
                structured = max(res[e] for e in EQUATIONS)
                assert (res["commutator"] < cfg.tol) is expect, (row.id, str(Q))
                assert (structured < cfg.tol) is expect, (row.id, res)
                count += 1
    assert count > 100


def test_matrix_time_dependence():
    V = parse_pauli("x3*s3")
    P3 = make_basis_generator("P3").op
    assert verify_operator(V, P3 + MatExpr.sigma(3, T), CFG).passed
    assert not verify_operator(V, P3 - MatExpr.sigma(3, T), CFG).passed


def test_matrix_commutator_sign_fixes_rotation_sense():
    # with V = lam s3 only one sense of rotation of (s1, s2) survives
    lam = 0.8
    V = MatExpr.sigma(3, const(lam))
    turn = as_diffop(MatExpr((const(0), cos(const(2 * lam) * T), sin(const(2 * lam) * T), const(0))))
    back = as_diffop(MatExpr((const(0), cos(const(2 * lam) * T), -sin(const(2 * lam) * T), const(0))))
    assert verify_operator(V, turn, CFG).passed
    assert not verify_operator(V, back, CFG).passed
    assert residuals_structured(V, back, CFG)["eq15"] > 0.1


def test_from_structure_builds_a_boost():
    cand = SymmetryCandidate.from_structure(0, [[0] * 3] * 3, (T, 0, 0), 0)
    G1 = make_basis_generator("G1").op
    diff = cand.to_operator() - G1.scale(1j)
    assert diff.is_zero() or np.max(np.abs(diff.evaluate(PointSample.draw(5, seed=1)))) < 1e-14
    assert verify_operator(0, cand.to_operator(), CFG).passed


def test_constant_field_needs_double_frequency():
    lam = 0.8
    V = MatExpr.sigma(3, const(lam))

    def rotating(w):
        return as_diffop(MatExpr((const(0), cos(const(w) * T), sin(const(w) * T), const(0))))

    assert verify_operator(V, rotating(2 * lam), CFG).passed
    assert not verify_operator(V, rotating(lam), CFG).passed
    rep = check_consequences(V)
    assert rep.vector_norm == pytest.approx(lam)


def test_consequences_isotropic_oscillator():
    rep = check_consequences(parse_pauli("0.5*r^2"))
    assert rep.hessian == "isotropic"
    assert rep.mu == pytest.approx(-1.0)
    assert ("trigonometric", pytest.approx(1.0)) in [(k, pytest.approx(v)) for k, v in rep.profiles]


def test_consequences_repulsive_and_axis():
    rep = check_consequences(parse_pauli("-2*r^2"))
    assert rep.mu == pytest.approx(4.0)
    assert any(k == "hyperbolic" and v == pytest.approx(2.0) for k, v in rep.profiles)
    rep = check_consequences(parse_pauli("0.5*x3^2"))
    assert rep.hessian == "per-axis"
    assert rep.axis_mu == {1: pytest.approx(0.0), 2: pytest.approx(0.0), 3: pytest.approx(-1.0)}


def test_consequences_inverse_square_admits_linear_dilation_profile():
    rep = check_consequences(parse_pauli("kappa/r^2", {"kappa": 1.7}), params={"kappa": 1.7})
    assert rep.hessian == "non-constant"
    assert rep.dilation_mu == pytest.approx(0.0, abs=1e-9)
    rep = check_consequences(parse_pauli("kappa/r^2 + 0.5*r^2", {"kappa": 1.7}), params={"kappa": 1.7})
    assert rep.dilation_mu == pytest.approx(-4.0)


def test_profile_class():
    assert profile_class(0.0) == ("linear", 0.0)
    assert profile_class(-4.0) == ("trigonometric", 2.0)
    assert profile_class(9.0) == ("hyperbolic", 3.0)


def test_verification_is_deterministic():
    V = parse_pauli("G(rt, x3) + kappa*phi", {"kappa": 0.4}, {"G": 2})
    op = make_basis_generator("L3").op + as_diffop(param("kappa") * T)
    cfg = VerifyConfig(samples=12, seed=9, params={"kappa": 0.4})
    assert verify_operator(V, op, cfg).dumps() == verify_operator(V, op, cfg).dumps()
    assert verify_operator(V, op, cfg).passed
