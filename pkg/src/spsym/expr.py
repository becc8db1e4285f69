"""Scalar symbolic expressions over t, x1, x2, x3.

Expressions are immutable trees built through the smart constructors
(:func:`add`, :func:`mul`, :func:`power`, :func:`func`, ...), which perform
only sound local rewrites.  Equality of two expressions is never decided
structurally; use :func:`spsym.sampling.probably_equal` instead.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

VARIABLES = ("t", "x1", "x2", "x3")
SPATIAL = ("x1", "x2", "x3")

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "exp", "ln", "atan")

# Reserved parameter names.  eps-type parameters only take the values +-1.
RESERVED_PARAMS = (
    "kappa", "omega", "omega1", "omega2", "omega3", "mu", "nu", "lambda",
    "n", "eps", "eps1", "eps2", "eps3",
)
SIGN_PARAMS = ("eps", "eps1", "eps2", "eps3")


class ExprError(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact Gaussian rationals
# ---------------------------------------------------------------------------
class GaussRational:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussRational":
        if isinstance(value, GaussRational):
            return value
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        if isinstance(value, (int, Fraction)):
            return cls(value, 0)
        if isinstance(value, float):
            return cls(Fraction(value), 0)
        if isinstance(value, np.generic):
            return cls.coerce(value.item())
        raise TypeError(f"cannot convert {value!r} to a constant")

    def __add__(self, o):
        return GaussRational(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return GaussRational(self.re - o.re, self.im - o.im)

    def __mul__(self, o):
        return GaussRational(self.re * o.re - self.im * o.im,
                             self.re * o.im + self.im * o.re)

    def __truediv__(self, o):
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        return GaussRational((self.re * o.re + self.im * o.im) / den,
                             (self.im * o.re - self.re * o.im) / den)

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __pow__(self, k: int):
        if k < 0:
            return GaussRational(1) / (self ** -k)
        out, base = GaussRational(1), self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, o):
        return isinstance(o, GaussRational) and self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_one(self) -> bool:
        return self.re == 1 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRational({self.re}, {self.im})"


# ---------------------------------------------------------------------------
# nodes
# ---------------------------------------------------------------------------
class Expr:
    __slots__ = ("_hash",)

    def _key(self) -> tuple:
        raise NotImplementedError

    def _init_hash(self):
        self._hash = hash((type(self).__name__,) + self._key())

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._key() == other._key()

    def __ne__(self, other):
        return not self == other

    def __add__(self, o):
        return add(self, as_expr(o))

    def __radd__(self, o):
        return add(as_expr(o), self)

    def __sub__(self, o):
        return add(self, neg(as_expr(o)))

    def __rsub__(self, o):
        return add(as_expr(o), neg(self))

    def __mul__(self, o):
        return mul(self, as_expr(o))

    def __rmul__(self, o):
        return mul(as_expr(o), self)

    def __truediv__(self, o):
        return mul(self, power(as_expr(o), -1))

    def __rtruediv__(self, o):
        return mul(as_expr(o), power(self, -1))

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        return power(self, k)

    def __repr__(self):
        return f"Expr({to_str(self)})"

    def __str__(self):
        return to_str(self)

    # children, for generic traversals
    def children(self) -> tuple["Expr", ...]:
        return ()

    def rebuild(self, children: tuple["Expr", ...]) -> "Expr":
        return self


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: GaussRational):
        self.value = value
        self._init_hash()

    def _key(self):
        return (self.value.re, self.value.im)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if name not in VARIABLES:
            raise ExprError(f"unknown variable {name!r}")
        self.name = name
        self._init_hash()

    def _key(self):
        return (self.name,)


class Param(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._init_hash()

    def _key(self):
        return (self.name,)


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = terms
        self._init_hash()

    def _key(self):
        return self.terms

    def children(self):
        return self.terms

    def rebuild(self, children):
        return add(*children)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        self.factors = factors
        self._init_hash()

    def _key(self):
        return self.factors

    def children(self):
        return self.factors

    def rebuild(self, children):
        return mul(*children)


class Pow(Expr):
    """``base ** exponent`` with a rational exponent (principal branch)."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Fraction):
        self.base = base
        self.exponent = exponent
        self._init_hash()

    def _key(self):
        return (self.base, self.exponent)

    def children(self):
        return (self.base,)

    def rebuild(self, children):
        return power(children[0], self.exponent)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        self.name = name
        self.arg = arg
        self._init_hash()

    def _key(self):
        return (self.name, self.arg)

    def children(self):
        return (self.arg,)

    def rebuild(self, children):
        return func(self.name, children[0])


class Atan2(Expr):
    __slots__ = ("y", "x")

    def __init__(self, y: Expr, x: Expr):
        self.y = y
        self.x = x
        self._init_hash()

    def _key(self):
        return (self.y, self.x)

    def children(self):
        return (self.y, self.x)

    def rebuild(self, children):
        return atan2(*children)


class Placeholder(Expr):
    """Application of an arbitrary function, e.g. ``G(rt, x3)``."""

    __slots__ = ("name", "args", "orders")

    def __init__(self, name: str, args: tuple[Expr, ...], orders: tuple[int, ...] | None = None):
        self.name = name
        self.args = tuple(args)
        self.orders = tuple(orders) if orders is not None else (0,) * len(args)
        if len(self.orders) != len(self.args):
            raise ExprError("derivative orders do not match placeholder arity")
        self._init_hash()

    @property
    def arity(self) -> int:
        return len(self.args)

    def _key(self):
        return (self.name, self.args, self.orders)

    def children(self):
        return self.args

    def rebuild(self, children):
        return placeholder(self.name, tuple(children), self.orders)


class PlaceholderDerivative(Placeholder):
    """Partial derivative of a placeholder with respect to its formal slots."""

    __slots__ = ()


def placeholder(name: str, args: tuple[Expr, ...], orders: tuple[int, ...] | None = None) -> Placeholder:
    if orders is not None and any(orders):
        return PlaceholderDerivative(name, args, orders)
    return Placeholder(name, args)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------
def const(value) -> Const:
    return Const(GaussRational.coerce(value))


ZERO = const(0)
ONE = const(1)
I_UNIT = Const(GaussRational(0, 1))
T = Var("t")
X1, X2, X3 = Var("x1"), Var("x2"), Var("x3")
X = (X1, X2, X3)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return const(value)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value.is_zero()


def is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value.is_one()


def _split_coeff(e: Expr) -> tuple[GaussRational, Expr | None]:
    if isinstance(e, Const):
        return e.value, None
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        rest = e.factors[1:]
        return e.factors[0].value, (rest[0] if len(rest) == 1 else Mul(rest))
    return GaussRational(1), e


def add(*terms: Expr) -> Expr:
    total = GaussRational(0)
    coeffs: dict[Expr, GaussRational] = {}
    stack = list(terms)
    flat: list[Expr] = []
    while stack:
        term = stack.pop(0)
        if isinstance(term, Add):
            stack[0:0] = list(term.terms)
        else:
            flat.append(term)
    for term in flat:
        c, rest = _split_coeff(term)
        if rest is None:
            total = total + c
        elif rest in coeffs:
            coeffs[rest] = coeffs[rest] + c
        else:
            coeffs[rest] = c
    out = []
    for rest, c in coeffs.items():
        if c.is_zero():
            continue
        out.append(rest if c.is_one() else _scaled(c, rest))
    if not total.is_zero():
        out.append(Const(total))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def _scaled(c: GaussRational, rest: Expr) -> Expr:
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    return Mul((Const(c), rest))


def _base_exp(f: Expr) -> tuple[Expr, Fraction]:
    if isinstance(f, Pow):
        return f.base, f.exponent
    return f, Fraction(1)


def mul(*factors: Expr) -> Expr:
    coeff = GaussRational(1)
    powers: dict[Expr, Fraction] = {}
    stack = list(factors)
    while stack:
        f = stack.pop(0)
        if isinstance(f, Mul):
            stack[0:0] = list(f.factors)
            continue
        if isinstance(f, Const):
            if f.value.is_zero():
                return ZERO
            coeff = coeff * f.value
            continue
        base, e = _base_exp(f)
        powers[base] = powers.get(base, Fraction(0)) + e
    out: list[Expr] = []
    for base, e in powers.items():
        if e == 0:
            continue
        p = power(base, e)
        if isinstance(p, Const):
            coeff = coeff * p.value
        elif isinstance(p, Mul):
            for g in p.factors:
                if isinstance(g, Const):
                    coeff = coeff * g.value
                else:
                    out.append(g)
        else:
            out.append(p)
    if coeff.is_zero():
        return ZERO
    if not out:
        return Const(coeff)
    if coeff.is_one():
        return out[0] if len(out) == 1 else Mul(tuple(out))
    return Mul((Const(coeff),) + tuple(out))


def neg(e: Expr) -> Expr:
    return mul(Const(GaussRational(-1)), e)


def power(base: Expr, exponent) -> Expr:
    base = as_expr(base)
    if isinstance(exponent, Const):
        if not exponent.value.is_real():
            raise ExprError("complex exponents are not supported")
        exponent = exponent.value.re
    exponent = Fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    integral = exponent.denominator == 1
    if isinstance(base, Const):
        if integral:
            if base.value.is_zero() and exponent < 0:
                raise ZeroDivisionError("0 raised to a negative power")
            return Const(base.value ** int(exponent))
        if base.value.is_one():
            return ONE
    if isinstance(base, Pow) and integral:
        return power(base.base, base.exponent * exponent)
    if isinstance(base, Mul) and integral:
        return mul(*(power(f, exponent) for f in base.factors))
    return Pow(base, exponent)


_FUNC_AT_ZERO = {"sin": 0, "cos": 1, "sinh": 0, "cosh": 1, "exp": 1, "atan": 0}


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function {name!r}")
    arg = as_expr(arg)
    if is_zero(arg) and name in _FUNC_AT_ZERO:
        return const(_FUNC_AT_ZERO[name])
    if name == "ln" and is_one(arg):
        return ZERO
    if name == "exp" and isinstance(arg, Func) and arg.name == "ln":
        return arg.arg
    return Func(name, arg)


def atan2(y: Expr, x: Expr) -> Expr:
    return Atan2(as_expr(y), as_expr(x))


def sin(e):
    return func("sin", as_expr(e))


def cos(e):
    return func("cos", as_expr(e))


def sinh(e):
    return func("sinh", as_expr(e))


def cosh(e):
    return func("cosh", as_expr(e))


def exp(e):
    return func("exp", as_expr(e))


def ln(e):
    return func("ln", as_expr(e))


def sqrt(e):
    return power(as_expr(e), Fraction(1, 2))


def var(name: str) -> Var:
    return Var(name)


def param(name: str) -> Param:
    return Param(name)


# shorthands of the potential grammar
def r_expr() -> Expr:
    return sqrt(X1 ** 2 + X2 ** 2 + X3 ** 2)


def rt_expr() -> Expr:
    return sqrt(X1 ** 2 + X2 ** 2)


def phi_expr() -> Expr:
    return atan2(X2, X1)


def theta_expr() -> Expr:
    return atan2(rt_expr(), X3)


def r2_expr() -> Expr:
    return X1 ** 2 + X2 ** 2 + X3 ** 2


# ---------------------------------------------------------------------------
# traversals
# ---------------------------------------------------------------------------
def free_symbols(e: Expr) -> tuple[set[str], set[str], set[tuple[str, int]]]:
    """Variables, parameters and (placeholder, arity) pairs occurring in ``e``."""
    vs: set[str] = set()
    ps: set[str] = set()
    phs: set[tuple[str, int]] = set()
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            vs.add(node.name)
        elif isinstance(node, Param):
            ps.add(node.name)
        elif isinstance(node, Placeholder):
            phs.add((node.name, node.arity))
        stack.extend(node.children())
    return vs, ps, phs


def depends_on(e: Expr, name: str) -> bool:
    return name in free_symbols(e)[0]


def substitute(e: Expr, bindings: Mapping[str, Expr]) -> Expr:
    """Capture-free substitution of variables and/or parameters by expressions."""
    bindings = {k: as_expr(v) for k, v in bindings.items()}
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        if node in memo:
            return memo[node]
        if isinstance(node, (Var, Param)):
            out = bindings.get(node.name, node)
        elif isinstance(node, Const):
            out = node
        else:
            out = node.rebuild(tuple(go(c) for c in node.children()))
        memo[node] = out
        return out

    return go(e)


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the smart constructors."""
    return substitute(e, {})


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------
@lru_cache(maxsize=200_000)
def diff(e: Expr, v: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    if v not in VARIABLES:
        raise ExprError(f"cannot differentiate with respect to {v!r}")
    if isinstance(e, (Const, Param)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return add(*(diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        parts = []
        fs = e.factors
        for i, f in enumerate(fs):
            df = diff(f, v)
            if is_zero(df):
                continue
            parts.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*parts)
    if isinstance(e, Pow):
        db = diff(e.base, v)
        if is_zero(db):
            return ZERO
        return mul(Const(GaussRational(e.exponent)), power(e.base, e.exponent - 1), db)
    if isinstance(e, Func):
        da = diff(e.arg, v)
        if is_zero(da):
            return ZERO
        a = e.arg
        if e.name == "sin":
            outer = cos(a)
        elif e.name == "cos":
            outer = neg(sin(a))
        elif e.name == "sinh":
            outer = cosh(a)
        elif e.name == "cosh":
            outer = sinh(a)
        elif e.name == "exp":
            outer = e
        elif e.name == "ln":
            outer = power(a, -1)
        elif e.name == "atan":
            outer = power(add(ONE, power(a, 2)), -1)
        else:  # pragma: no cover - guarded by func()
            raise ExprError(e.name)
        return mul(outer, da)
    if isinstance(e, Atan2):
        dy, dx = diff(e.y, v), diff(e.x, v)
        if is_zero(dy) and is_zero(dx):
            return ZERO
        num = add(mul(e.x, dy), neg(mul(e.y, dx)))
        return mul(num, power(add(power(e.x, 2), power(e.y, 2)), -1))
    if isinstance(e, Placeholder):
        parts = []
        for j, a in enumerate(e.args):
            da = diff(a, v)
            if is_zero(da):
                continue
            orders = list(e.orders)
            orders[j] += 1
            parts.append(mul(placeholder(e.name, e.args, tuple(orders)), da))
        return add(*parts)
    raise ExprError(f"cannot differentiate node {type(e).__name__}")


def gradient(e: Expr) -> tuple[Expr, Expr, Expr]:
    return tuple(diff(e, v) for v in SPATIAL)  # type: ignore[return-value]


def laplacian(e: Expr) -> Expr:
    return add(*(diff(diff(e, v), v) for v in SPATIAL))


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------
class EvalEnv:
    """Numeric bindings for one batch of sample points.

    ``variables`` maps each of t, x1, x2, x3 to a complex array of shape (N,);
    ``params`` maps parameter names to complex scalars; ``placeholders`` is an
    object with an ``evaluate(name, orders, args)`` method.
    """

    def __init__(self, variables: Mapping[str, np.ndarray], params: Mapping[str, complex],
                 placeholders=None):
        self.variables = {k: np.asarray(v, dtype=complex) for k, v in variables.items()}
        self.size = len(next(iter(self.variables.values())))
        self.params = dict(params)
        self.placeholders = placeholders
        self.memo: dict[Expr, np.ndarray] = {}


def _positive_real(a: np.ndarray) -> np.ndarray:
    return (a.real > 0) & (np.abs(a.imag) <= 1e-12 * np.maximum(1.0, np.abs(a.real)))


def _real_or_nan(a: np.ndarray) -> np.ndarray:
    ok = np.abs(a.imag) <= 1e-12 * np.maximum(1.0, np.abs(a.real))
    return np.where(ok, a.real, np.nan)


def evaluate(e: Expr, env: EvalEnv) -> np.ndarray:
    """Evaluate ``e`` on every point of ``env``.

    Points where the expression is singular (division by zero, logarithm or
    fractional power of a non-positive number) evaluate to NaN.
    """
    memo = env.memo
    hit = memo.get(e)
    if hit is not None:
        return hit
    n = env.size
    if isinstance(e, Const):
        out = np.full(n, complex(e.value))
    elif isinstance(e, Var):
        out = env.variables[e.name]
    elif isinstance(e, Param):
        try:
            value = env.params[e.name]
        except KeyError:
            raise ExprError(f"parameter {e.name!r} has no numeric value") from None
        if value is None:
            raise ExprError(f"parameter {e.name!r} is symbolic-only")
        out = np.full(n, complex(value))
    elif isinstance(e, Add):
        out = evaluate(e.terms[0], env).copy()
        for term in e.terms[1:]:
            out += evaluate(term, env)
    elif isinstance(e, Mul):
        out = evaluate(e.factors[0], env).copy()
        for f in e.factors[1:]:
            out *= evaluate(f, env)
    elif isinstance(e, Pow):
        b = evaluate(e.base, env)
        k = e.exponent
        with np.errstate(all="ignore"):
            if k.denominator == 1:
                out = b ** int(k)
            else:
                ok = _positive_real(b)
                out = np.where(ok, np.abs(b.real) ** float(k), np.nan).astype(complex)
    elif isinstance(e, Func):
        a = evaluate(e.arg, env)
        with np.errstate(all="ignore"):
            if e.name == "ln":
                out = np.where(_positive_real(a), np.log(np.abs(a.real)), np.nan).astype(complex)
            elif e.name == "atan":
                out = np.arctan(a)
            else:
                out = getattr(np, e.name)(a)
    elif isinstance(e, Atan2):
        y = _real_or_nan(evaluate(e.y, env))
        x = _real_or_nan(evaluate(e.x, env))
        out = np.arctan2(y, x).astype(complex)
    elif isinstance(e, Placeholder):
        if env.placeholders is None:
            raise ExprError(f"placeholder {e.name!r} is not instantiated")
        args = [evaluate(a, env) for a in e.args]
        out = env.placeholders.evaluate(e.name, e.orders, args)
    else:  # pragma: no cover
        raise ExprError(f"cannot evaluate node {type(e).__name__}")
    memo[e] = out
    return out


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------
def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _fmt_const(c: GaussRational) -> str:
    if c.im == 0:
        return _fmt_rational(c.re)
    if c.re == 0:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "-i"
        return f"{_fmt_rational(c.im)}*i"
    return f"({_fmt_rational(c.re)} + {_fmt_rational(c.im)}*i)"


_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _PREC_ADD
    if isinstance(e, Mul):
        return _PREC_MUL
    if isinstance(e, Const):
        c = e.value
        if c.re < 0 or (c.re == 0 and c.im < 0) or (c.re != 0 and c.im != 0) or c.re.denominator != 1:
            return _PREC_MUL
        return _PREC_ATOM
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def to_str(e: Expr) -> str:
    """Render ``e`` in the potential-expression grammar."""

    def wrap(node: Expr, min_prec: int) -> str:
        s = to_str(node)
        return f"({s})" if _prec(node) < min_prec else s

    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, (Var, Param)):
        return e.name
    if isinstance(e, Add):
        parts = [to_str(e.terms[0])]
        for term in e.terms[1:]:
            c, rest = _split_coeff(term)
            if rest is not None and c.im == 0 and c.re < 0:
                parts.append(" - " + to_str(_scaled(-c, rest) if not (-c).is_one() else rest))
            else:
                parts.append(" + " + to_str(term))
        return "".join(parts)
    if isinstance(e, Mul):
        c, rest = _split_coeff(e)
        if rest is not None and c.im == 0 and c.re == -1:
            return "-" + wrap(rest, _PREC_MUL + 1) if isinstance(rest, Mul) else "-" + wrap(rest, _PREC_MUL)
        return "*".join(wrap(f, _PREC_MUL) for f in e.factors)
    if isinstance(e, Pow):
        k = e.exponent
        if k == Fraction(1, 2):
            return f"sqrt({to_str(e.base)})"
        ks = _fmt_rational(k)
        ks = ks if (k.denominator == 1 and k > 0) else f"({ks})"
        return f"{wrap(e.base, _PREC_ATOM)}^{ks}"
    if isinstance(e, Func):
        return f"{e.name}({to_str(e.arg)})"
    if isinstance(e, Atan2):
        return f"atan2({to_str(e.y)}, {to_str(e.x)})"
    if isinstance(e, Placeholder):
        args = ", ".join(to_str(a) for a in e.args)
        if any(e.orders):
            tag = ",".join(str(o) for o in e.orders)
            return f"D[{tag}]{e.name}({args})"
        return f"{e.name}({args})"
    return repr(e)


def tree_size(e: Expr) -> int:
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.extend(node.children())
    return len(seen)


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------
class ParamTable(dict):
    """Parameter name -> real value, or ``None`` for symbolic-only parameters."""

    def __init__(self, values: Mapping[str, float | None] | None = None, *, reserved: bool = True):
        super().__init__()
        if reserved:
            for name in RESERVED_PARAMS:
                self[name] = None
        for k, v in (values or {}).items():
            self[k] = v

    def __setitem__(self, name: str, value):
        if name in VARIABLES:
            raise ExprError(f"{name!r} is a variable, not a parameter")
        if value is not None:
            value = float(value)
            if _is_sign_param(name) and value not in (-1.0, 1.0):
                raise ExprError(f"sign parameter {name!r} must be +1 or -1, got {value}")
        super().__setitem__(name, value)

    def update(self, other=(), **kw):  # route through validation
        for k, v in dict(other, **kw).items():
            self[k] = v

    def numeric(self) -> dict[str, complex]:
        return {k: complex(v) for k, v in self.items() if v is not None}

    def with_values(self, values: Mapping[str, float]) -> "ParamTable":
        out = ParamTable(reserved=False)
        for k, v in self.items():
            out[k] = v
        for k, v in values.items():
            out[k] = v
        return out


def _is_sign_param(name: str) -> bool:
    return name in SIGN_PARAMS


def collect(exprs: Iterable[Expr]) -> list[Expr]:
    return [as_expr(e) for e in exprs]
