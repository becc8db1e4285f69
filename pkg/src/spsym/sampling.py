"""Randomized numeric evaluation of expressions.

A :class:`PointSample` is a batch of points in (t, x1, x2, x3) together with a
numeric parameter instantiation and a random-polynomial instantiation of
every arbitrary-function placeholder.  Placeholder derivatives evaluate to the
exact derivatives of the instantiated polynomial.
"""
from __future__ import annotations

import itertools
import math
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import (
    EvalEnv,
    Expr,
    ExprError,
    Placeholder,
    add,
    const,
    evaluate,
    mul,
    power,
    substitute,
)

X_RANGE = (0.5, 2.0)
T_RANGE = (-1.0, 1.0)

DEFAULT_SAMPLES = 20
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


class SamplingFault(RuntimeError):
    """Too many sample points hit a singularity of the evaluated expressions."""


def _monomials(arity: int, degree: int) -> list[tuple[int, ...]]:
    return [m for m in itertools.product(range(degree + 1), repeat=arity) if sum(m) <= degree]


@dataclass
class RandomPolynomial:
    """Dense polynomial of bounded total degree in ``arity`` formal slots."""

    exponents: np.ndarray  # (n_terms, arity)
    coefficients: np.ndarray  # (n_terms,)

    @classmethod
    def draw(cls, arity: int, degree: int, rng: np.random.Generator) -> "RandomPolynomial":
        mons = _monomials(arity, degree)
        return cls(np.array(mons, dtype=int).reshape(len(mons), arity), rng.standard_normal(len(mons)))

    def derivative_terms(self, orders: Sequence[int]):
        """Coefficients and exponents of the partial derivative of given orders."""
        orders = np.asarray(orders, dtype=int)
        keep = np.all(self.exponents >= orders, axis=1)
        exps = self.exponents[keep]
        coeffs = self.coefficients[keep].copy()
        for j, k in enumerate(orders):
            for m in range(k):
                coeffs *= exps[:, j] - m
        return coeffs, exps - orders

    def evaluate(self, orders: Sequence[int], args: Sequence[np.ndarray]) -> np.ndarray:
        coeffs, exps = self.derivative_terms(orders)
        n = len(args[0]) if args else 1
        out = np.zeros(n, dtype=complex)
        for c, e in zip(coeffs, exps):
            term = np.full(n, complex(c))
            for a, k in zip(args, e):
                if k:
                    term = term * a ** int(k)
            out += term
        return out

    def as_expr(self, orders: Sequence[int], args: Sequence[Expr]) -> Expr:
        coeffs, exps = self.derivative_terms(orders)
        terms = []
        for c, e in zip(coeffs, exps):
            factors = [const(float(c))]
            factors += [power(a, int(k)) for a, k in zip(args, e) if k]
            terms.append(mul(*factors))
        return add(*terms)


@dataclass
class PlaceholderInstantiation:
    """One random polynomial per placeholder name, drawn lazily from ``seed``."""

    seed: int = 0
    degree: int = 3
    polys: dict[str, RandomPolynomial] = field(default_factory=dict)

    def polynomial(self, name: str, arity: int) -> RandomPolynomial:
        poly = self.polys.get(name)
        if poly is None:
            # per-name stream: instantiation does not depend on evaluation order
            rng = np.random.default_rng([self.seed, arity, zlib.crc32(name.encode())])
            poly = RandomPolynomial.draw(arity, self.degree, rng)
            self.polys[name] = poly
        elif poly.exponents.shape[1] != arity:
            raise ExprError(f"placeholder {name!r} used with arity {arity}, "
                            f"declared with {poly.exponents.shape[1]}")
        return poly

    def evaluate(self, name: str, orders: Sequence[int], args: Sequence[np.ndarray]) -> np.ndarray:
        return self.polynomial(name, len(args)).evaluate(orders, args)


def instantiate_placeholders(e: Expr, inst: PlaceholderInstantiation) -> Expr:
    """Replace every placeholder application by its instantiated polynomial."""
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        if node in memo:
            return memo[node]
        children = node.children()
        if isinstance(node, Placeholder):
            args = tuple(go(a) for a in children)
            out = inst.polynomial(node.name, len(args)).as_expr(node.orders, args)
        elif children:
            out = node.rebuild(tuple(go(c) for c in children))
        else:
            out = node
        memo[node] = out
        return out

    return go(e)


def draw_points(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """t uniform in [-1, 1]; each x_a uniform in +-[0.5, 2.0] with a random sign."""
    t = rng.uniform(*T_RANGE, size=n)
    mag = rng.uniform(*X_RANGE, size=(n, 3))
    sign = rng.choice([-1.0, 1.0], size=(n, 3))
    return t, mag * sign


class PointSample:
    """A batch of sample points with numeric parameters and placeholders.

    The same sample evaluates any expression deterministically; evaluated
    subtrees are cached on the sample.
    """

    def __init__(self, t: np.ndarray, x: np.ndarray, params: Mapping[str, complex] | None = None,
                 placeholders: PlaceholderInstantiation | None = None, seed: int | None = None):
        self.t = np.asarray(t, dtype=float)
        self.x = np.asarray(x, dtype=float).reshape(len(self.t), 3)
        self.params = {k: complex(v) for k, v in (params or {}).items() if v is not None}
        self.placeholders = placeholders if placeholders is not None else PlaceholderInstantiation(seed or 0)
        self.seed = seed
        self._env = EvalEnv({"t": self.t, "x1": self.x[:, 0], "x2": self.x[:, 1], "x3": self.x[:, 2]},
                            self.params, self.placeholders)

    @classmethod
    def draw(cls, n: int = DEFAULT_SAMPLES, seed: int = 0, params: Mapping[str, complex] | None = None,
             degree: int = 3, placeholders: PlaceholderInstantiation | None = None) -> "PointSample":
        rng = np.random.default_rng(seed)
        t, x = draw_points(n, rng)
        inst = placeholders if placeholders is not None else PlaceholderInstantiation(seed, degree)
        return cls(t, x, params, inst, seed)

    @classmethod
    def at(cls, t: float = 0.0, x: Sequence[float] = (0.0, 0.0, 0.0), params=None, placeholders=None):
        return cls(np.array([t]), np.array([x], dtype=float), params, placeholders)

    def __len__(self) -> int:
        return len(self.t)

    def eval(self, e: Expr) -> np.ndarray:
        with np.errstate(all="ignore"):
            out = evaluate(e, self._env)
        return np.where(np.isfinite(out), out, np.nan + 0j)

    def eval_scalar(self, e: Expr) -> complex:
        return complex(self.eval(e)[0])

    def subset(self, mask: np.ndarray) -> "PointSample":
        return PointSample(self.t[mask], self.x[mask], self.params, self.placeholders, self.seed)

    def concat(self, other: "PointSample") -> "PointSample":
        return PointSample(np.concatenate([self.t, other.t]), np.concatenate([self.x, other.x]),
                           self.params, self.placeholders, self.seed)


def draw_valid(exprs: Iterable[Expr], n: int = DEFAULT_SAMPLES, seed: int = 0,
               params: Mapping[str, complex] | None = None, degree: int = 3,
               placeholders: PlaceholderInstantiation | None = None,
               retries: int = 3) -> PointSample:
    """Draw ``n`` points at which every expression in ``exprs`` is finite.

    Singular points are discarded and replaced; after ``retries`` refills
    without reaching ``n`` good points a :class:`SamplingFault` is raised.
    """
    exprs = list(exprs)
    rng = np.random.default_rng(seed)
    inst = placeholders if placeholders is not None else PlaceholderInstantiation(seed, degree)
    good_t: list[np.ndarray] = []
    good_x: list[np.ndarray] = []
    have = 0
    for _ in range(retries + 1):
        want = max(2 * (n - have), 8)
        t, x = draw_points(want, rng)
        trial = PointSample(t, x, params, inst, seed)
        ok = np.ones(want, dtype=bool)
        for e in exprs:
            ok &= np.isfinite(trial.eval(e))
        good_t.append(t[ok])
        good_x.append(x[ok])
        have += int(ok.sum())
        if have >= n:
            break
    if have < n:
        raise SamplingFault(f"only {have} of {n} sample points were non-singular")
    t = np.concatenate(good_t)[:n]
    x = np.concatenate(good_x)[:n]
    return PointSample(t, x, params, inst, seed)


def probably_equal(a: Expr, b: Expr, sample: PointSample | None = None, *, n: int = DEFAULT_SAMPLES,
                   seed: int = 0, params=None, rtol: float = DEFAULT_RTOL,
                   atol: float = DEFAULT_ATOL) -> bool:
    """Randomized identity test of two scalar expressions."""
    diffexpr = a - b
    if sample is None:
        sample = draw_valid([a, b], n=n, seed=seed, params=params)
    va, vb = sample.eval(a), sample.eval(b)
    scale = max(np.nanmax(np.abs(va)), np.nanmax(np.abs(vb)), 0.0)
    err = np.nanmax(np.abs(sample.eval(diffexpr)))
    return bool(err <= max(rtol * scale, atol))


def max_abs(values: np.ndarray) -> float:
    values = np.asarray(values)
    if values.size == 0:
        return 0.0
    if np.any(np.isnan(values)):
        return math.inf
    return float(np.max(np.abs(values)))


__all__ = [
    "PointSample",
    "PlaceholderInstantiation",
    "RandomPolynomial",
    "SamplingFault",
    "draw_valid",
    "instantiate_placeholders",
    "probably_equal",
    "substitute",
]
