"""Named symmetry generators of free, oscillator and matrix type.

Conventions: ``P0 = i d_t``, ``Pa = -i d_a``, ``Ga = t Pa - x_a``,
``Mab = x_a Pb - x_b Pa`` with ``L1 = M23``, ``L2 = M31``, ``L3 = M12``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .diffop import DiffOp, StructuredForm, as_diffop, structured_form
from .expr import (
    I_UNIT,
    ONE,
    SPATIAL,
    Const,
    Expr,
    ExprError,
    ParamTable,
    T,
    X,
    as_expr,
    cos,
    exp,
    mul,
    r2_expr,
    sin,
)
from .pauli import MatExpr


class GeneratorError(ExprError):
    pass


@dataclass(frozen=True)
class NamedGenerator:
    name: str
    op: DiffOp

    @property
    def structured(self) -> StructuredForm | None:
        try:
            return structured_form(self.op)
        except ExprError:
            return None

    def __add__(self, other: "NamedGenerator") -> "NamedGenerator":
        return NamedGenerator(f"{self.name} + {other.name}", self.op + other.op)

    def scaled(self, c, name: str | None = None) -> "NamedGenerator":
        return NamedGenerator(name or f"({c})*{self.name}", self.op.scale(c))


def _partial(a: int, coeff) -> DiffOp:
    return DiffOp.partial(SPATIAL[a - 1], coeff)


def P0() -> DiffOp:
    return DiffOp.partial("t", I_UNIT)


def P(a: int) -> DiffOp:
    return _partial(a, mul(-1, I_UNIT))


def G(a: int) -> DiffOp:
    return P(a).scale(T) - X[a - 1]


def M(a: int, b: int) -> DiffOp:
    return P(b).scale(X[a - 1]) - P(a).scale(X[b - 1])


def L(a: int) -> DiffOp:
    b, c = {1: (2, 3), 2: (3, 1), 3: (1, 2)}[a]
    return M(b, c)


def xP() -> DiffOp:
    """x_a P_a."""
    return sum((P(a).scale(X[a - 1]) for a in (1, 2, 3)), DiffOp.zero())


def xP_sym() -> DiffOp:
    """x_a P_a + P_a x_a = 2 x_a P_a - 3i."""
    return xP().scale(2) + as_diffop(mul(-3, I_UNIT))


def D() -> DiffOp:
    return P0().scale(2 * T) - xP() + as_diffop(mul(as_expr(1.5), I_UNIT))


def A() -> DiffOp:
    # +r^2/2: the sign that makes A a symmetry of the free equation
    return D().scale(T) - P0().scale(T ** 2) + as_diffop(r2_expr() * as_expr(0.5))


def A_printed() -> DiffOp:
    return D().scale(T) - P0().scale(T ** 2) - as_diffop(r2_expr() * as_expr(0.5))


def B_trig(a: int, w: Expr) -> DiffOp:
    """B_a^+(w) = sin(wt) Pa - w x_a cos(wt)."""
    return P(a).scale(sin(w * T)) - as_diffop(w * X[a - 1] * cos(w * T))


def Bh_trig(a: int, w: Expr) -> DiffOp:
    """hat B_a^+(w) = cos(wt) Pa + w x_a sin(wt)."""
    return P(a).scale(cos(w * T)) + as_diffop(w * X[a - 1] * sin(w * T))


def B_exp(a: int, w: Expr) -> DiffOp:
    """B_a^-(w) = exp(wt)(Pa - w x_a)."""
    return (P(a) - X[a - 1] * w).scale(exp(w * T))


def Bh_exp(a: int, w: Expr) -> DiffOp:
    """hat B_a^-(w) = exp(-wt)(Pa + w x_a)."""
    return (P(a) + X[a - 1] * w).scale(exp(-w * T))


def A_trig(w: Expr) -> DiffOp:
    core = P0() - as_diffop(w ** 2 * r2_expr())
    return core.scale(sin(2 * w * T)) - xP_sym().scale(w * as_expr(0.5) * cos(2 * w * T))


def Ah_trig(w: Expr) -> DiffOp:
    core = P0() - as_diffop(w ** 2 * r2_expr())
    return core.scale(cos(2 * w * T)) + xP_sym().scale(w * as_expr(0.5) * sin(2 * w * T))


def A_exp(w: Expr) -> DiffOp:
    core = P0() + as_diffop(w ** 2 * r2_expr()) - xP_sym().scale(w * as_expr(0.5))
    return core.scale(exp(2 * w * T))


def Ah_exp(w: Expr) -> DiffOp:
    core = P0() + as_diffop(w ** 2 * r2_expr()) + xP_sym().scale(w * as_expr(0.5))
    return core.scale(exp(-2 * w * T))


def Q_gen(w: Expr, n: Expr) -> DiffOp:
    """exp(wt)(P3 - w x3 + n s3)."""
    return (P(3) - X[2] * w + MatExpr.sigma(3, n)).scale(exp(w * T))


def Qt_gen(w: Expr, n: Expr) -> DiffOp:
    """A^-(w) - n w exp(2wt) s3."""
    return A_exp(w) + MatExpr.sigma(3, -n * w * exp(2 * w * T))


def Qt_printed(w: Expr, n: Expr) -> DiffOp:
    """exp(2wt)(P0 + w x_a P_a - 3iw/2 + w^2 r^2), as typeset, plus the s3 term."""
    core = P0() + xP().scale(w) + as_diffop(-as_expr(1.5) * I_UNIT * w + w ** 2 * r2_expr())
    return core.scale(exp(2 * w * T)) + MatExpr.sigma(3, n * w * exp(2 * w * T))


def B_hyp(a: int, w: Expr) -> DiffOp:
    """sinh(wt) Pa - w x_a cosh(wt): real-basis partner of the exponential pair."""
    from .expr import cosh, sinh

    return P(a).scale(sinh(w * T)) - as_diffop(w * X[a - 1] * cosh(w * T))


def Bh_hyp(a: int, w: Expr) -> DiffOp:
    from .expr import cosh, sinh

    return P(a).scale(cosh(w * T)) - as_diffop(w * X[a - 1] * sinh(w * T))


# ---------------------------------------------------------------------------
# name resolution
# ---------------------------------------------------------------------------
_FIXED = {
    "P0": P0, "D": D, "A": A, "Aprinted": A_printed,
    "I": lambda: as_diffop(ONE),
    "tI": lambda: as_diffop(T),
}


def _sign_of(value: Expr, params: Mapping, what: str) -> int:
    from .expr import Param

    if isinstance(value, Param):
        v = params.get(value.name)
        if v is None:
            raise GeneratorError(f"{what} needs a numeric value for {value.name!r}")
        value = as_expr(v)
    if isinstance(value, Const) and value.value.is_real() and value.value.re in (1, -1):
        return int(value.value.re)
    raise GeneratorError(f"{what} must be +1 or -1")


def _want(args: Sequence, k: int, name: str):
    if len(args) != k:
        raise GeneratorError(f"{name} takes {k} argument(s), got {len(args)}")


def make_basis_generator(name: str, args: Sequence = (), params: Mapping | None = None) -> NamedGenerator:
    """Build a catalog generator.

    ``args`` are scalar expressions (numbers or parameters).  Families:
    ``P0 Pa Ga La Mab D A I tI``, ``Ba+(w) Bha+(w) Ba-(w) Bha-(w)``,
    ``Ba(eps,w) Bha(eps,w)`` (eps = +1 trigonometric, -1 exponential),
    ``Bsa(w) Bcha(w)`` hyperbolic, ``A+(w) Ah+(w) A-(w) Ah-(w)``,
    ``Q(w,n) Qt(w,n) QtPrinted(w,n)``.  ``Bt``/``At`` alias ``Bh``/``Ah``.
    """
    params = params if params is not None else ParamTable()
    args = tuple(as_expr(a) for a in args)
    label = name + (f"({', '.join(str(a) for a in args)})" if args else "")
    if name in _FIXED:
        _want(args, 0, name)
        return NamedGenerator(label, _FIXED[name]())
    m = re.fullmatch(r"([PGL])([123])", name)
    if m:
        _want(args, 0, name)
        fn = {"P": P, "G": G, "L": L}[m.group(1)]
        return NamedGenerator(label, fn(int(m.group(2))))
    m = re.fullmatch(r"M([123])([123])", name)
    if m and m.group(1) != m.group(2):
        _want(args, 0, name)
        return NamedGenerator(label, M(int(m.group(1)), int(m.group(2))))
    m = re.fullmatch(r"(B|Bh|Bt)([123])([+-]?)", name)
    if m:
        hat = m.group(1) != "B"
        a = int(m.group(2))
        if m.group(3):
            _want(args, 1, name)
            sign = 1 if m.group(3) == "+" else -1
            w = args[0]
        else:
            _want(args, 2, name)
            sign = _sign_of(args[0], params, f"{name} family sign")
            w = args[1]
        if sign == 1:
            op = Bh_trig(a, w) if hat else B_trig(a, w)
        else:
            op = Bh_exp(a, w) if hat else B_exp(a, w)
        return NamedGenerator(label, op)
    m = re.fullmatch(r"(Bs|Bch)([123])", name)
    if m:
        _want(args, 1, name)
        a = int(m.group(2))
        op = B_hyp(a, args[0]) if m.group(1) == "Bs" else Bh_hyp(a, args[0])
        return NamedGenerator(label, op)
    m = re.fullmatch(r"(A|Ah|At)([+-])", name)
    if m:
        _want(args, 1, name)
        hat = m.group(1) != "A"
        w = args[0]
        if m.group(2) == "+":
            op = Ah_trig(w) if hat else A_trig(w)
        else:
            op = Ah_exp(w) if hat else A_exp(w)
        return NamedGenerator(label, op)
    if name in ("Q", "Qt", "QtPrinted"):
        _want(args, 2, name)
        fn = {"Q": Q_gen, "Qt": Qt_gen, "QtPrinted": Qt_printed}[name]
        return NamedGenerator(label, fn(*args))
    raise GeneratorError(f"unknown generator {name!r}")


def schrodinger_basis() -> list[NamedGenerator]:
    """P0, I, Pa, Ga, La, D, A: the 13 free-particle symmetries."""
    names = ["P0", "I", "P1", "P2", "P3", "G1", "G2", "G3", "L1", "L2", "L3", "D", "A"]
    return [make_basis_generator(n) for n in names]


__all__ = [
    "GeneratorError",
    "NamedGenerator",
    "make_basis_generator",
    "schrodinger_basis",
]
