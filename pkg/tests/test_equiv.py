from __future__ import annotations

import numpy as np
import pytest

from spsym import corpus
from spsym.detsys import VerifyConfig, verify_operator
from spsym.diffop import DiffOp, as_diffop
from spsym.equiv import (IDENTITY, TransformError, TransformSpec, apply_transform, check_applicable,
                         conjugate_generator, homogeneity_defect, parse_kappa, potentials_agree,
                         transform_potential, transport_check)
from spsym.expr import T, X3, const
from spsym.generators import G, P, P0, make_basis_generator, schrodinger_basis
from spsym.parsing import parse_pauli
from spsym.sampling import PointSample

S = PointSample.draw(15, seed=1)


def op_residual(a: DiffOp, b: DiffOp) -> float:
    d = a - b
    return 0.0 if d.is_zero() else float(np.max(np.abs(d.evaluate(S))))


@pytest.mark.parametrize("spec,want", [
    (TransformSpec("et1", omega=1.0), "0.5*r^2"),
    (TransformSpec("et2", omega=1.0), "-0.5*r^2"),
    (TransformSpec("et3", kappa=(0, 0, 1)), "x3"),
    (TransformSpec("et3", kappa=(0.5, -1, 2)), "0.5*x1 - x2 + 2*x3"),
    (TransformSpec("et01", mu=0.5, nu=0.3), "0.5 + 0.3*s3"),
    (TransformSpec("et1", omega=2.0, normalization="scaled"), "2*r^2"),
])
def test_free_equation_maps(spec, want):
    res = apply_transform(0, spec)
    assert res.verified
    assert potentials_agree(res.potential, parse_pauli(want)) < 1e-9


def test_printed_normalization_only_consistent_at_unit_frequency():
    assert not apply_transform(0, TransformSpec("et1", omega=2.0)).verified
    with pytest.raises(TransformError):
        transform_potential(0, TransformSpec("et2", omega=0.5))


def test_canonical_strings():
    res = apply_transform(0, TransformSpec("et01", mu=0.5, nu=0.3))
    assert res.canonical == ["0.5", "0", "0", "0.3"]
    out = apply_transform(parse_pauli("1.7/r^2"), TransformSpec("et1")).to_json()
    assert out["potential"] == ["0.5*x1^2 + 0.5*x2^2 + 0.5*x3^2 + V0", "0", "0", "0"]
    assert any("V0..V3" in n for n in out["notes"])


def test_free_fall_rules():
    for k in (1.0, 0.7):
        spec = TransformSpec("et3", kappa=(0, 0, k))
        assert op_residual(conjugate_generator(P0(), spec), P0() + G(3).scale(k) + as_diffop(T * T * (k * k / 2))) < 1e-14
        assert op_residual(conjugate_generator(P(3), spec), P(3) + as_diffop(T * k)) < 1e-14
        assert op_residual(conjugate_generator(as_diffop(X3), spec), as_diffop(X3 + T * T * (k / 2))) < 1e-14


def test_identity_spec_is_identity():
    for g in schrodinger_basis():
        assert conjugate_generator(g.op, IDENTITY) is g.op
    spec = TransformSpec("et0")
    for g in schrodinger_basis():
        assert op_residual(conjugate_generator(g.op, spec), g.op) < 1e-14


def test_constant_matrix_conjugation():
    # sigma_1 swaps the spinor components and maps s3 -> -s3
    spec = TransformSpec("et0", matrix=(0, 1, 0, 0))
    res = apply_transform(parse_pauli("x1*s3"), spec)
    assert res.verified
    assert potentials_agree(res.potential, parse_pauli("-x1*s3")) < 1e-12


@pytest.mark.parametrize("kind,target", [("et1", "0.5*r^2"), ("et2", "-0.5*r^2")])
def test_free_symmetries_transport_to_oscillators(kind, target):
    spec = TransformSpec(kind)
    Vn = transform_potential(0, spec)
    assert potentials_agree(Vn, parse_pauli(target)) < 1e-9
    cfg = VerifyConfig(samples=12, seed=3, tol=1e-8)
    for g in schrodinger_basis():
        ok, worst = transport_check(0, g.op, spec, cfg=cfg)
        assert ok, (g.name, worst)


@pytest.mark.parametrize("kind", ["et1", "et2"])
def test_homogeneous_potential_keeps_its_symmetries(kind):
    V = parse_pauli("1.7/r^2 + G(theta, phi)/r^2", placeholders={"G": 2})
    assert homogeneity_defect(V) < 1e-12
    cfg = VerifyConfig(samples=12, seed=3, tol=1e-8)
    for name in ("P0", "D", "A", "I"):
        ok, worst = transport_check(V, make_basis_generator(name).op, TransformSpec(kind), cfg=cfg)
        assert ok, (name, worst)


def test_homogeneity_guard_detects_other_degrees():
    assert homogeneity_defect(parse_pauli("0.5*r^2")) > 1e-2
    assert homogeneity_defect(parse_pauli("x1^-2 + s3/(x2*x3)")) < 1e-12


def _star_rows():
    return [r for r in corpus.load() if "star" in r.flags]


@pytest.mark.parametrize("row", _star_rows(), ids=lambda r: r.id)
def test_transport_on_marked_rows(row):
    params = row.base_params()
    V, table, phs = row.build(params)
    ops = [op for _, op in row.generators(params, phs)]
    cfg = VerifyConfig(samples=12, seed=5, tol=1e-8, params=table)
    specs = [TransformSpec("et01", mu=0.5, nu=0.3)]
    for a in range(3):
        kappa = [0.0, 0.0, 0.0]
        kappa[a] = 0.8
        spec = TransformSpec("et3", kappa=tuple(kappa))
        try:
            check_applicable(V, spec, table)
        except TransformError:
            continue
        specs.append(spec)
    assert len(specs) >= 1
    for spec in specs:
        Vn = transform_potential(V, spec, table)
        for op in ops:
            assert verify_operator(V, op, cfg, structured=False).passed
            rep = verify_operator(Vn, conjugate_generator(op, spec), cfg, structured=False)
            assert rep.passed, (row.id, spec.kind, rep.residuals)


def test_free_fall_needs_shift_invariance():
    V = parse_pauli("G(x1, x2)", placeholders={"G": 2})
    check_applicable(V, TransformSpec("et3", kappa=(0, 0, 1)))
    with pytest.raises(TransformError, match="x1"):
        check_applicable(V, TransformSpec("et3", kappa=(1, 0, 0)))
    with pytest.raises(TransformError):
        apply_transform(V, TransformSpec("et3", kappa=(0, 1, 0)))


def test_spec_validation():
    with pytest.raises(TransformError):
        TransformSpec("et9")
    with pytest.raises(TransformError):
        TransformSpec("et0", matrix=(1, 1, 0, 0))  # 1 + s1 is singular
    with pytest.raises(TransformError):
        TransformSpec("et1", omega=0.0)
    assert parse_kappa([2.0]) == (0.0, 0.0, 2.0)
    assert parse_kappa([1, 2, 3]) == (1.0, 2.0, 3.0)
    with pytest.raises(TransformError):
        parse_kappa([1, 2])


def test_spec_json():
    js = TransformSpec("et01", mu=0.5, nu=0.3).to_json()
    assert js["kind"] == "et01" and js["mu"] == 0.5 and js["nu"] == 0.3
