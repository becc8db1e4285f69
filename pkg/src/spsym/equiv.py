"""Equivalence transformations of the Pauli-Schrodinger equation.

A transformation is described by a forward change of variables
(t, x) -> (t', x'), its inverse, and a multiplier ``m`` with psi' = m psi.
Any operator Q acting on psi is carried to Q' = m Q m^-1 written in the new
variables.  Applied to L = i d_t + Laplacian/2 - V this gives a multiple of
an operator of the same form, from which the new potential is read off.
The principal part is checked numerically; a map that does not preserve the
form of the equation is reported rather than trusted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .diffop import ZERO_INDEX, DiffOp, schrodinger_operator, unit_index
from .expr import (I_UNIT, ONE, SPATIAL, VARIABLES, ExprError, ParamTable, T, Var, as_expr, atan2, cos, cosh,
                   diff, exp, free_symbols, ln, power, sin, sinh, sqrt)
from .pauli import MatExpr, as_mat, simplify_mat
from .sampling import PointSample, draw_valid

KINDS = ("et0", "et01", "et1", "et2", "et3")
_HALF_INDEXES = [tuple(2 if i == a else 0 for i in range(4)) for a in range(1, 4)]


class TransformError(ExprError):
    """The transformation does not apply to the given potential."""


@dataclass(frozen=True)
class TransformSpec:
    """Parameters of one equivalence transformation.

    ``matrix`` holds the Pauli components (a0, a1, a2, a3) of the constant
    matrix a0 + a.sigma used by ``et0``.  ``normalization`` selects between
    the literal conformal maps (``"printed"``, correct only at omega = 1) and
    the omega-consistent ones (``"scaled"``).
    """

    kind: str
    omega: float = 1.0
    kappa: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mu: float = 0.0
    nu: float = 0.0
    matrix: tuple[complex, complex, complex, complex] = (1.0, 0.0, 0.0, 0.0)
    normalization: str = "printed"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TransformError(f"unknown transformation kind {self.kind!r}; expected one of {KINDS}")
        if self.normalization not in ("printed", "scaled"):
            raise TransformError(f"unknown normalization {self.normalization!r}")
        if len(self.kappa) != 3:
            raise TransformError("kappa needs three components")
        if self.kind in ("et1", "et2") and self.omega == 0:
            raise TransformError("omega must be non-zero")
        if self.kind == "et0":
            a0, a1, a2, a3 = (complex(v) for v in self.matrix)
            if abs(a0 * a0 - a1 * a1 - a2 * a2 - a3 * a3) < 1e-12:
                raise TransformError("matrix is singular")

    def to_json(self) -> dict:
        return {"kind": self.kind, "omega": self.omega, "kappa": list(self.kappa), "mu": self.mu,
                "nu": self.nu, "matrix": [str(complex(v)) for v in self.matrix],
                "normalization": self.normalization}


IDENTITY = TransformSpec("et0")


@dataclass
class ChangeOfVariables:
    forward: dict[str, object]   # new variable -> expression in old variables
    inverse: dict[str, object]   # old variable -> expression in new variables
    multiplier: MatExpr          # psi' = m psi, in old variables
    inverse_multiplier: MatExpr | None = None

    def m_inv(self) -> MatExpr:
        return self.inverse_multiplier if self.inverse_multiplier is not None else _mat_inverse(self.multiplier)


def _x(a: int) -> Var:
    return Var(SPATIAL[a])


def _r2():
    return _x(0) ** 2 + _x(1) ** 2 + _x(2) ** 2


def _identity_maps() -> tuple[dict, dict]:
    ident = {v: Var(v) for v in VARIABLES}
    return dict(ident), dict(ident)


def change_of_variables(spec: TransformSpec) -> ChangeOfVariables:
    w = as_expr(spec.omega)
    if spec.kind == "et0":
        fwd, inv = _identity_maps()
        a = np.array([complex(v) for v in spec.matrix])
        det = a[0] ** 2 - a[1] ** 2 - a[2] ** 2 - a[3] ** 2
        b = np.concatenate([[a[0]], -a[1:]]) / det
        m = MatExpr(tuple(as_expr(complex(v)) for v in a))
        return ChangeOfVariables(fwd, inv, m, MatExpr(tuple(as_expr(complex(v)) for v in b)))
    if spec.kind == "et01":
        fwd, inv = _identity_maps()
        mu, nu = as_expr(spec.mu), as_expr(spec.nu)
        # exp(-i M t) with M = mu + nu s3
        def rot(sign: complex) -> MatExpr:
            phase = exp(as_expr(sign) * mu * T)
            return MatExpr((phase * cos(nu * T), as_expr(0), as_expr(0), as_expr(sign) * phase * sin(nu * T)))

        return ChangeOfVariables(fwd, inv, rot(-1j), rot(1j))
    if spec.kind == "et3":
        k = [as_expr(float(c)) for c in spec.kappa]
        half = as_expr(0.5)
        fwd = {"t": T, **{SPATIAL[a]: _x(a) - half * k[a] * T ** 2 for a in range(3)}}
        inv = {"t": T, **{SPATIAL[a]: _x(a) + half * k[a] * T ** 2 for a in range(3)}}
        kx = k[0] * _x(0) + k[1] * _x(1) + k[2] * _x(2)
        k2 = as_expr(float(sum(c * c for c in spec.kappa)))
        m = exp(as_expr(-1j) * T * kx + I_UNIT * k2 * T ** 3 / as_expr(3))
        return ChangeOfVariables(fwd, inv, MatExpr.scalar(m))

    trig = spec.kind == "et1"
    scaled = spec.normalization == "scaled"
    # s = omega t in the scaled maps, plain t in the literal ones
    s = w * T if scaled else T
    gain = w * w if scaled else w
    sign = 1 if trig else -1
    g = ONE + as_expr(sign) * s ** 2  # 1 + t^2 or 1 - t^2
    if trig:
        t_new = atan2(s, ONE) / w
        t_old = (sin(w * T) / cos(w * T)) / (w if scaled else ONE)
        stretch = cos(w * T)
    else:
        t_new = ln((ONE + s) / (ONE - s)) / (as_expr(2) * w)
        t_old = (sinh(w * T) / cosh(w * T)) / (w if scaled else ONE)
        stretch = cosh(w * T)
    fwd = {"t": t_new, **{SPATIAL[a]: _x(a) / sqrt(g) for a in range(3)}}
    inv = {"t": t_old, **{SPATIAL[a]: _x(a) / stretch for a in range(3)}}
    phase = as_expr(-0.5j * sign) * gain * T * _r2() / g
    m = power(g, 0.75) * exp(phase)
    return ChangeOfVariables(fwd, inv, MatExpr.scalar(m))


def _mat_inverse(m: MatExpr) -> MatExpr:
    if m.is_scalar():
        return MatExpr.scalar(ONE / m.scalar_part)
    a = m.scalar_part
    b = m.vector_part
    det = a * a - b[0] * b[0] - b[1] * b[1] - b[2] * b[2]
    inv_det = ONE / det
    return MatExpr((a * inv_det, -b[0] * inv_det, -b[1] * inv_det, -b[2] * inv_det))


def _old_derivatives(cov: ChangeOfVariables) -> dict[str, DiffOp]:
    """Old partial derivatives as first-order operators in the new variables."""
    out = {}
    for u in VARIABLES:
        coeffs = {}
        for v in VARIABLES:
            j = diff(as_expr(cov.forward[v]), u)
            coeffs[unit_index(v)] = MatExpr.scalar(j).substitute(cov.inverse)
        out[u] = DiffOp(coeffs)
    return out


def _transport(op: DiffOp, cov: ChangeOfVariables) -> DiffOp:
    """m op m^-1 in the new variables."""
    m = cov.multiplier
    conj = DiffOp.multiplication(m).compose(op).compose(DiffOp.multiplication(cov.m_inv()))
    partials = _old_derivatives(cov)
    out = DiffOp.zero()
    for k, c in conj.coeffs.items():
        term = DiffOp.multiplication(c.substitute(cov.inverse))
        for u, n in zip(VARIABLES, k):
            for _ in range(n):
                term = term.compose(partials[u])
        out = out + term
    return out


def _kappa_axes(spec: TransformSpec) -> list[int]:
    return [a for a in range(3) if spec.kappa[a] != 0]


def _sample(exprs, params, seed: int, samples: int) -> PointSample:
    return draw_valid(exprs, n=samples, seed=seed, params=params)


def _exprs(*ops: DiffOp) -> list:
    out = []
    for op in ops:
        for c in op.coeffs.values():
            out.extend(c.c)
    return out


def _numeric(params) -> dict:
    if params is None:
        return {}
    if isinstance(params, ParamTable):
        return params.numeric()
    return dict(params)


def check_applicable(V, spec: TransformSpec, params=None, seed: int = 0, samples: int = 20,
                     tol: float = 1e-10) -> None:
    """Raise TransformError when the free-fall map is asked to act on an axis V depends on."""
    if spec.kind != "et3":
        return
    V = as_mat(V)
    p = _numeric(params)
    for a in _kappa_axes(spec):
        dV = V.diff(SPATIAL[a])
        if dV.is_zero():
            continue
        s = _sample(list(V.c) + list(dV.c), p, seed, samples)
        scale = 1.0 + float(np.max(np.abs(V.evaluate(s))))
        if float(np.max(np.abs(dV.evaluate(s)))) > tol * scale:
            raise TransformError(f"potential depends on {SPATIAL[a]}; the free-fall map needs "
                                 f"invariance under shifts along that axis")


def _fmt_coeff(c: complex) -> str:
    re_, im_ = round(c.real, 10) + 0.0, round(c.imag, 10) + 0.0
    if im_ == 0:
        return f"{re_:.10g}"
    if re_ == 0:
        return f"{im_:.10g}*i"
    return f"({re_:.10g}{im_:+.10g}*i)"


def canonical_form(V, reference=None, params=None, seed: int = 0, samples: int = 40,
                   tol: float = 1e-9) -> list[str] | None:
    """Readable form of a transformed potential, when one exists.

    Each Pauli component is fitted with constant coefficients on monomials of
    degree <= 2 in x and, when given, the components of ``reference``.
    Returns one string per component, or None if the fit is not exact.
    """
    V = as_mat(V)
    basis: list[tuple[str, object]] = [("1", ONE)]
    basis += [(SPATIAL[a], _x(a)) for a in range(3)]
    basis += [(f"{SPATIAL[a]}*{SPATIAL[b]}" if a != b else f"{SPATIAL[a]}^2", _x(a) * _x(b))
              for a in range(3) for b in range(a, 3)]
    if reference is not None:
        names = ["V0", "V1", "V2", "V3"]
        basis += [(names[i], c) for i, c in enumerate(as_mat(reference).c)
                  if not _is_const(c)]
    s = _sample(list(V.c) + [e for _, e in basis], _numeric(params), seed, samples)
    A = np.stack([np.broadcast_to(s.eval(e), (len(s),)) for _, e in basis], axis=1).astype(complex)
    out = []
    for comp in V.c:
        y = np.broadcast_to(s.eval(comp), (len(s),)).astype(complex)
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        scale = 1.0 + float(np.max(np.abs(y)))
        if float(np.max(np.abs(A @ coef - y))) > tol * scale:
            return None
        terms = []
        for (name, _), c in zip(basis, coef):
            if abs(c) <= 1e-11 * scale:
                continue
            cs = _fmt_coeff(complex(c))
            terms.append(cs if name == "1" else (name if cs == "1" else f"{cs}*{name}"))
        out.append(" + ".join(terms).replace("+ -", "- ") or "0")
    return out


def _is_const(e) -> bool:
    return not any(free_symbols(as_expr(e))[0])


@dataclass
class TransformResult:
    potential: MatExpr
    time_factor: object          # L' = time_factor * m L m^-1 has canonical principal part
    residual: float
    verified: bool
    spec: TransformSpec
    notes: list[str] = field(default_factory=list)
    canonical: list[str] | None = None

    def to_json(self) -> dict:
        out = {"potential": self.canonical or self.potential.to_strings(), "residual": self.residual,
               "verified": self.verified, "transform": self.spec.to_json(), "notes": list(self.notes)}
        if self.canonical and any("V" in c for c in self.canonical):
            out["notes"].append("V0..V3 are the Pauli components of the input potential")
        if self.canonical is None:
            out["notes"].append("no closed polynomial form found; potential shown unsimplified")
        return out


def apply_transform(V, spec: TransformSpec, params=None, seed: int = 0, samples: int = 20,
                    tol: float = 1e-9) -> TransformResult:
    """Transport the Schrodinger operator and compare its principal part with canonical form."""
    V = as_mat(V)
    check_applicable(V, spec, params, seed, samples)
    cov = change_of_variables(spec)
    L = _transport(schrodinger_operator(V), cov)
    ct = L.ct()
    if ct.is_zero():
        raise TransformError("transported operator lost its time derivative")
    factor = as_expr(1j) / ct.scalar_part
    N = L.scale(factor)
    potential = simplify_mat(-N.c0())

    p = _numeric(params)
    s = _sample(_exprs(N), p, seed, samples)
    expected = {unit_index("t"): 1j, **{k: 0.5 for k in _HALF_INDEXES}}
    worst = 0.0
    for k, c in N.coeffs.items():
        if k == ZERO_INDEX:
            continue
        vals = c.evaluate(s)
        target = np.zeros_like(vals)
        if k in expected:
            target[0] = expected[k]
        worst = max(worst, float(np.max(np.abs(vals - target))))
    for k in expected:
        if k not in N.coeffs:
            worst = max(worst, abs(expected[k]))
    notes = []
    if worst >= tol:
        notes.append("principal part is not of Schrodinger form; check the normalization of the map")
    canon = canonical_form(potential, V, params, seed) if worst < tol else None
    return TransformResult(potential, factor, worst, worst < tol, spec, notes, canon)


def transform_potential(V, spec: TransformSpec, params=None, seed: int = 0, samples: int = 20,
                        tol: float = 1e-9) -> MatExpr:
    res = apply_transform(V, spec, params, seed, samples, tol)
    if not res.verified:
        raise TransformError(f"{spec.kind} does not preserve the equation form "
                             f"(principal-part residual {res.residual:.2e})")
    return res.potential


def conjugate_generator(Q, spec: TransformSpec) -> DiffOp:
    """Carry a symmetry operator of the old equation to the new variables."""
    op = Q.op if hasattr(Q, "op") else Q
    if not isinstance(op, DiffOp):
        op = DiffOp.multiplication(as_mat(op))
    if spec == IDENTITY:
        return op
    return _transport(op, change_of_variables(spec))


def potentials_agree(a, b, params=None, seed: int = 0, samples: int = 20, rtol: float = 1e-9) -> float:
    """Relative maximum difference of two matrix potentials at random points."""
    a, b = as_mat(a), as_mat(b)
    s = _sample(list(a.c) + list(b.c), _numeric(params), seed, samples)
    va, vb = a.evaluate(s), b.evaluate(s)
    scale = 1.0 + max(float(np.max(np.abs(va))), float(np.max(np.abs(vb))))
    return float(np.max(np.abs(va - vb))) / scale


def homogeneity_defect(V, degree: float = -2.0, params=None, seed: int = 0, samples: int = 20) -> float:
    """max |V(s x) - s^degree V(x)| over random points and scales s, relative."""
    V = as_mat(V)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for s_val in rng.uniform(0.5, 2.0, size=3):
        sv = as_expr(float(s_val))
        scaled = V.substitute({x: Var(x) * sv for x in SPATIAL})
        target = V * as_expr(float(s_val) ** degree)
        worst = max(worst, potentials_agree(scaled, target, params, seed, samples))
    return worst


def transport_check(V, Q, spec: TransformSpec, params=None, cfg=None) -> tuple[bool, float]:
    """Verify that the carried generator is a symmetry of the carried potential."""
    from .detsys import VerifyConfig, verify_operator

    cfg = cfg or VerifyConfig(params=dict(_numeric(params)))
    Vn = transform_potential(V, spec, params)
    rep = verify_operator(Vn, conjugate_generator(Q, spec), cfg, structured=False)
    return rep.passed, max(rep.residuals.values())


def parse_kappa(values: Sequence[float] | float | None) -> tuple[float, float, float]:
    if values is None:
        return (0.0, 0.0, 0.0)
    if isinstance(values, (int, float)):
        return (0.0, 0.0, float(values))
    vals = [float(v) for v in values]
    if len(vals) == 1:
        return (0.0, 0.0, vals[0])
    if len(vals) != 3:
        raise TransformError("kappa takes one value (third axis) or three components")
    return tuple(vals)  # type: ignore[return-value]


__all__ = [
    "IDENTITY",
    "KINDS",
    "ChangeOfVariables",
    "TransformError",
    "TransformResult",
    "TransformSpec",
    "apply_transform",
    "change_of_variables",
    "check_applicable",
    "conjugate_generator",
    "homogeneity_defect",
    "parse_kappa",
    "potentials_agree",
    "transform_potential",
    "transport_check",
]
