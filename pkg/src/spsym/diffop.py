"""Linear differential operators with 2x2 matrix coefficients.

An operator is a finite map from a multi-index ``(k_t, k_1, k_2, k_3)`` to the
:class:`MatExpr` coefficient standing to the left of
``d_t^k_t d_1^k_1 d_2^k_2 d_3^k_3``.  Because partials commute, storing one
coefficient per multi-index is the symmetrized normal form automatically.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

from .expr import (
    I_UNIT,
    ONE,
    SPATIAL,
    VARIABLES,
    ZERO,
    Expr,
    ExprError,
    add,
    as_expr,
    diff,
    mul,
    simplify,
)
from .pauli import MatExpr, as_mat

MultiIndex = tuple[int, int, int, int]
ZERO_INDEX: MultiIndex = (0, 0, 0, 0)
MAX_ORDER = 3


class OrderOverflow(ExprError):
    """Composition would exceed the supported operator order."""


class ProjectionError(ExprError):
    """Raised when a basis used for projection is numerically rank deficient."""

    def __init__(self, message: str, degenerate: Sequence[int] = ()):
        super().__init__(message)
        self.degenerate = list(degenerate)


def unit_index(v: str) -> MultiIndex:
    k = [0, 0, 0, 0]
    k[VARIABLES.index(v)] = 1
    return tuple(k)  # type: ignore[return-value]


def _order(k: MultiIndex) -> int:
    return sum(k)


def _sub_indices(k: MultiIndex):
    """All gamma <= k with the product of binomial coefficients."""
    for g0 in range(k[0] + 1):
        for g1 in range(k[1] + 1):
            for g2 in range(k[2] + 1):
                for g3 in range(k[3] + 1):
                    g = (g0, g1, g2, g3)
                    w = comb(k[0], g0) * comb(k[1], g1) * comb(k[2], g2) * comb(k[3], g3)
                    yield g, w


def diff_multi(e: MatExpr, k: MultiIndex) -> MatExpr:
    out = e
    for v, n in zip(VARIABLES, k):
        for _ in range(n):
            out = out.diff(v)
    return out


def index_name(k: MultiIndex) -> str:
    parts = []
    for v, n in zip(VARIABLES, k):
        if n == 1:
            parts.append(f"d{v}")
        elif n > 1:
            parts.append(f"d{v}^{n}")
    return "*".join(parts) if parts else "1"


class DiffOp:
    """Immutable differential operator in coefficient normal form."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[MultiIndex, MatExpr] | None = None):
        clean: dict[MultiIndex, MatExpr] = {}
        for k, c in (coeffs or {}).items():
            k = tuple(int(x) for x in k)
            if len(k) != 4 or min(k) < 0:
                raise ExprError(f"bad multi-index {k}")
            c = as_mat(c)
            if not c.is_zero():
                clean[k] = c  # type: ignore[index]
        self.coeffs = clean

    # -- construction -----------------------------------------------------
    @classmethod
    def multiplication(cls, c) -> "DiffOp":
        return cls({ZERO_INDEX: as_mat(c)})

    @classmethod
    def partial(cls, v: str, coeff=ONE) -> "DiffOp":
        return cls({unit_index(v): as_mat(coeff)})

    @classmethod
    def zero(cls) -> "DiffOp":
        return cls({})

    # -- inspection -------------------------------------------------------
    @property
    def order(self) -> int:
        return max((_order(k) for k in self.coeffs), default=0)

    def coeff(self, k) -> MatExpr:
        return self.coeffs.get(tuple(k), MatExpr.zero())

    def c0(self) -> MatExpr:
        return self.coeff(ZERO_INDEX)

    def ct(self) -> MatExpr:
        return self.coeff(unit_index("t"))

    def ca(self, a: int) -> MatExpr:
        return self.coeff(unit_index(SPATIAL[a - 1]))

    def cab(self, a: int, b: int) -> MatExpr:
        k = [0, 0, 0, 0]
        k[a] += 1
        k[b] += 1
        return self.coeff(tuple(k))

    def is_zero(self) -> bool:
        return not self.coeffs

    def indices(self) -> list[MultiIndex]:
        return sorted(self.coeffs, key=lambda k: (_order(k), k))

    # -- algebra ----------------------------------------------------------
    def __add__(self, other) -> "DiffOp":
        other = as_diffop(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return DiffOp({k: self.coeff(k) + other.coeff(k) for k in keys})

    __radd__ = __add__

    def __sub__(self, other) -> "DiffOp":
        return self + (-as_diffop(other))

    def __rsub__(self, other) -> "DiffOp":
        return as_diffop(other) - self

    def __neg__(self) -> "DiffOp":
        return DiffOp({k: -c for k, c in self.coeffs.items()})

    def scale(self, c) -> "DiffOp":
        """Left multiplication of every coefficient by a scalar or matrix."""
        if isinstance(c, MatExpr):
            return DiffOp({k: c * v for k, v in self.coeffs.items()})
        c = as_expr(c)
        return DiffOp({k: v * c for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, DiffOp):
            return self.compose(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def compose(self, other: "DiffOp", max_order: int = MAX_ORDER) -> "DiffOp":
        """self o other by the Leibniz rule, derivatives moved to the right."""
        other = as_diffop(other)
        out: dict[MultiIndex, MatExpr] = {}
        for ka, a in self.coeffs.items():
            for kb, b in other.coeffs.items():
                for g, w in _sub_indices(ka):
                    db = diff_multi(b, g)
                    if db.is_zero():
                        continue
                    k = tuple(x - y + z for x, y, z in zip(ka, g, kb))
                    if _order(k) > max_order:
                        raise OrderOverflow(f"composition reaches order {_order(k)} > {max_order}")
                    term = a * db
                    if w != 1:
                        term = term * w
                    out[k] = out[k] + term if k in out else term  # type: ignore[index]
        return DiffOp(out)

    def map(self, fn) -> "DiffOp":
        return DiffOp({k: c.map(fn) for k, c in self.coeffs.items()})

    def substitute(self, bindings) -> "DiffOp":
        return DiffOp({k: c.substitute(bindings) for k, c in self.coeffs.items()})

    def simplify(self) -> "DiffOp":
        return self.map(simplify)

    # -- action -----------------------------------------------------------
    def apply(self, spinor: Sequence[Expr]) -> tuple[Expr, Expr]:
        """Act on a two-component spinor of scalar expressions."""
        u, w = (as_expr(s) for s in spinor)
        acc_u: list[Expr] = []
        acc_w: list[Expr] = []
        for k, c in self.coeffs.items():
            du, dw = u, w
            for v, n in zip(VARIABLES, k):
                for _ in range(n):
                    du, dw = diff(du, v), diff(dw, v)
            pu, pw = c.act((du, dw))
            acc_u.append(pu)
            acc_w.append(pw)
        return add(*acc_u), add(*acc_w)

    # -- numerics ---------------------------------------------------------
    def evaluate(self, sample, indices: Iterable[MultiIndex] | None = None) -> np.ndarray:
        """Coefficient values, shape (n_indices, 4, N), in the order of ``indices``."""
        keys = list(indices) if indices is not None else self.indices()
        n = len(sample)
        out = np.zeros((len(keys), 4, n), dtype=complex)
        for i, k in enumerate(keys):
            c = self.coeffs.get(k)
            if c is not None:
                out[i] = c.evaluate(sample)
        return out

    def __repr__(self):
        terms = [f"[{c}]*{index_name(k)}" for k, c in sorted(self.coeffs.items())]
        return "DiffOp(" + (" + ".join(terms) if terms else "0") + ")"


def as_diffop(value) -> DiffOp:
    if isinstance(value, DiffOp):
        return value
    return DiffOp.multiplication(as_mat(value))


def commutator(a: DiffOp, b: DiffOp, max_order: int = MAX_ORDER) -> DiffOp:
    return a.compose(b, max_order) - b.compose(a, max_order)


def schrodinger_operator(V) -> DiffOp:
    """L = i d_t + (1/2) Laplacian - V."""
    coeffs: dict[MultiIndex, MatExpr] = {unit_index("t"): MatExpr.scalar(I_UNIT)}
    half = MatExpr.scalar(as_expr(0.5))
    for a in range(1, 4):
        k = [0, 0, 0, 0]
        k[a] = 2
        coeffs[tuple(k)] = half  # type: ignore[index]
    coeffs[ZERO_INDEX] = -as_mat(V)
    return DiffOp(coeffs)


# ---------------------------------------------------------------------------
# structured first-order form
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class StructuredForm:
    """Q = xi0 d_t + xi^a d_a + (1/2) d_a xi^a + i eta."""

    xi0: Expr
    xi: tuple[Expr, Expr, Expr]
    eta: MatExpr

    @property
    def alpha(self) -> Expr:
        return mul(-1, diff(self.xi0, "t"))

    def divergence(self) -> Expr:
        return add(*(diff(x, v) for x, v in zip(self.xi, SPATIAL)))

    def to_diffop(self) -> DiffOp:
        coeffs = {unit_index("t"): MatExpr.scalar(self.xi0)}
        for x, v in zip(self.xi, SPATIAL):
            coeffs[unit_index(v)] = MatExpr.scalar(x)
        coeffs[ZERO_INDEX] = MatExpr.scalar(mul(as_expr(0.5), self.divergence())) + self.eta * I_UNIT
        return DiffOp(coeffs)


def structured_form(op: DiffOp) -> StructuredForm:
    """Read off (xi0, xi^a, eta) from a first-order operator.

    The ``d_t``/``d_a`` coefficients must be proportional to the identity.
    """
    if op.order > 1:
        raise ExprError("structured form requires a first-order operator")
    parts = [op.ct()] + [op.ca(a) for a in (1, 2, 3)]
    for p in parts:
        if not p.is_scalar():
            raise ExprError("derivative coefficients must be multiples of the identity")
    xi0 = parts[0].scalar_part
    xi = tuple(p.scalar_part for p in parts[1:])
    div = add(*(diff(x, v) for x, v in zip(xi, SPATIAL)))
    h = op.c0() - MatExpr.scalar(mul(as_expr(0.5), div))
    eta = h * mul(-1, I_UNIT)
    return StructuredForm(xi0, xi, eta)  # type: ignore[arg-type]


# ---------------------------------------------------------------------------
# projection onto a span of operators
# ---------------------------------------------------------------------------
def _pooled(ops: Sequence[DiffOp], sample) -> np.ndarray:
    keys = sorted({k for op in ops for k in op.coeffs}, key=lambda k: (_order(k), k))
    if not keys:
        return np.zeros((len(ops), 0), dtype=complex)
    cols = [op.evaluate(sample, keys).reshape(-1) for op in ops]
    return np.array(cols)


@dataclass
class Projection:
    coefficients: np.ndarray
    residual: float

    def as_list(self) -> list[complex]:
        return [complex(c) for c in self.coefficients]


def project(op: DiffOp, basis: Sequence, sample, rank_tol: float = 1e-10) -> Projection:
    """Least-squares coefficients of ``op`` in the span of ``basis``.

    ``basis`` holds DiffOps or objects with an ``op`` attribute.  The residual
    is the maximum absolute pointwise mismatch of the reconstruction.
    """
    ops = [b.op if hasattr(b, "op") else as_diffop(b) for b in basis]
    pooled = _pooled([op] + ops, sample)
    target, A = pooled[0], pooled[1:].T
    if not ops:
        return Projection(np.zeros(0, dtype=complex), float(np.max(np.abs(target), initial=0.0)))
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(target)):
        raise ExprError("non-finite coefficient values at the projection sample")
    s = np.linalg.svd(A, compute_uv=False)
    if s.size and (s[-1] <= rank_tol * max(s[0], 1e-300) or s.size < len(ops)):
        degenerate = _degenerate_subset(A, rank_tol)
        raise ProjectionError("basis is numerically rank deficient", degenerate)
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    resid = float(np.max(np.abs(A @ coef - target), initial=0.0))
    return Projection(coef, resid)


def _degenerate_subset(A: np.ndarray, rank_tol: float) -> list[int]:
    """Indices of a minimal dependent column subset, found greedily."""
    kept: list[int] = []
    for j in range(A.shape[1]):
        trial = A[:, kept + [j]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= rank_tol * max(s[0], 1e-300):
            # the dependency involves column j and (some of) the kept columns
            _, _, vh = np.linalg.svd(trial)
            null = vh[-1].conj()
            return [([*kept, j])[i] for i in np.nonzero(np.abs(null) > 1e-8)[0]]
        kept.append(j)
    return []


def max_abs_coefficient(op: DiffOp, sample) -> float:
    if op.is_zero():
        return 0.0
    vals = op.evaluate(sample)
    if np.any(~np.isfinite(vals)):
        return float("inf")
    return float(np.max(np.abs(vals)))


__all__ = [
    "DiffOp",
    "OrderOverflow",
    "Projection",
    "ProjectionError",
    "StructuredForm",
    "as_diffop",
    "commutator",
    "project",
    "schrodinger_operator",
    "structured_form",
]
