"""2x2 matrix expressions stored in the Pauli decomposition c0*I + ca*sigma_a."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .expr import (
    I_UNIT,
    ONE,
    ZERO,
    Expr,
    add,
    as_expr,
    cos,
    diff,
    is_zero,
    mul,
    neg,
    sin,
    simplify,
    substitute,
    to_str,
)

# Levi-Civita symbol restricted to the nonzero entries
_EPS = {(1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1, (1, 3, 2): -1, (3, 2, 1): -1, (2, 1, 3): -1}


def levi_civita(a: int, b: int, c: int) -> int:
    return _EPS.get((a, b, c), 0)


@dataclass(frozen=True)
class MatExpr:
    """c[0]*I + c[1]*sigma_1 + c[2]*sigma_2 + c[3]*sigma_3."""

    c: tuple[Expr, Expr, Expr, Expr]

    def __post_init__(self):
        if len(self.c) != 4:
            raise ValueError("a MatExpr needs exactly four components")
        object.__setattr__(self, "c", tuple(as_expr(x) for x in self.c))

    @classmethod
    def scalar(cls, e) -> "MatExpr":
        return cls((as_expr(e), ZERO, ZERO, ZERO))

    @classmethod
    def sigma(cls, b: int, coeff=ONE) -> "MatExpr":
        comps = [ZERO, ZERO, ZERO, ZERO]
        comps[b] = as_expr(coeff)
        return cls(tuple(comps))

    @classmethod
    def zero(cls) -> "MatExpr":
        return cls((ZERO, ZERO, ZERO, ZERO))

    @classmethod
    def identity(cls) -> "MatExpr":
        return cls.scalar(ONE)

    @property
    def scalar_part(self) -> Expr:
        return self.c[0]

    @property
    def vector_part(self) -> tuple[Expr, Expr, Expr]:
        return self.c[1], self.c[2], self.c[3]

    def is_scalar(self) -> bool:
        return all(is_zero(x) for x in self.c[1:])

    def is_zero(self) -> bool:
        return all(is_zero(x) for x in self.c)

    def __add__(self, other):
        other = as_mat(other)
        return MatExpr(tuple(add(a, b) for a, b in zip(self.c, other.c)))

    __radd__ = __add__

    def __sub__(self, other):
        other = as_mat(other)
        return MatExpr(tuple(add(a, neg(b)) for a, b in zip(self.c, other.c)))

    def __rsub__(self, other):
        return as_mat(other) - self

    def __neg__(self):
        return MatExpr(tuple(neg(a) for a in self.c))

    def __mul__(self, other):
        if isinstance(other, MatExpr):
            return mat_mul(self, other)
        e = as_expr(other)
        return MatExpr(tuple(mul(e, a) for a in self.c))

    def __rmul__(self, other):
        e = as_expr(other)
        return MatExpr(tuple(mul(e, a) for a in self.c))

    def diff(self, v: str) -> "MatExpr":
        return mat_diff(self, v)

    def substitute(self, bindings: Mapping[str, Expr]) -> "MatExpr":
        return MatExpr(tuple(substitute(a, bindings) for a in self.c))

    def map(self, fn) -> "MatExpr":
        return MatExpr(tuple(fn(a) for a in self.c))

    def evaluate(self, sample) -> np.ndarray:
        """Components at every point of ``sample``; shape (4, N)."""
        return np.stack([sample.eval(a) for a in self.c])

    def entries(self) -> tuple[tuple[Expr, Expr], tuple[Expr, Expr]]:
        c0, c1, c2, c3 = self.c
        return ((add(c0, c3), add(c1, neg(mul(I_UNIT, c2)))),
                (add(c1, mul(I_UNIT, c2)), add(c0, neg(c3))))

    def act(self, spinor: Sequence[Expr]) -> tuple[Expr, Expr]:
        (a, b), (c, d) = self.entries()
        u, w = spinor
        return add(mul(a, u), mul(b, w)), add(mul(c, u), mul(d, w))

    def to_strings(self) -> list[str]:
        return [to_str(a) for a in self.c]

    def __str__(self):
        labels = ("", "*s1", "*s2", "*s3")
        parts = [f"({to_str(a)}){lab}" for a, lab in zip(self.c, labels) if not is_zero(a)]
        return " + ".join(parts) if parts else "0"


def as_mat(value) -> MatExpr:
    if isinstance(value, MatExpr):
        return value
    return MatExpr.scalar(as_expr(value))


SIGMA = tuple(MatExpr.sigma(b) for b in range(4))


def mat_mul(A: MatExpr, B: MatExpr) -> MatExpr:
    """Product via sigma_a sigma_b = delta_ab I + i eps_abc sigma_c."""
    a, b = A.c, B.c
    c0 = add(mul(a[0], b[0]), *(mul(a[k], b[k]) for k in (1, 2, 3)))
    comps = [c0]
    for c in (1, 2, 3):
        cross = []
        for p in (1, 2, 3):
            for q in (1, 2, 3):
                s = levi_civita(p, q, c)
                if s:
                    cross.append(mul(s, a[p], b[q]))
        comps.append(add(mul(a[0], b[c]), mul(a[c], b[0]), mul(I_UNIT, add(*cross))))
    return MatExpr(tuple(comps))


def mat_comm(A: MatExpr, B: MatExpr) -> MatExpr:
    """[A, B] = 2i (a x b) . sigma, computed from the vector parts."""
    a, b = A.c, B.c
    comps = [ZERO]
    for c in (1, 2, 3):
        cross = []
        for p in (1, 2, 3):
            for q in (1, 2, 3):
                s = levi_civita(p, q, c)
                if s:
                    cross.append(mul(s, a[p], b[q]))
        comps.append(mul(2, I_UNIT, add(*cross)))
    return MatExpr(tuple(comps))


def mat_diff(A: MatExpr, v: str) -> MatExpr:
    return MatExpr(tuple(diff(a, v) for a in A.c))


def expand_M(n, u) -> MatExpr:
    """M(n, u) = sigma_1 cos(2 n u) + sigma_2 sin(2 n u)."""
    arg = mul(2, as_expr(n), as_expr(u))
    return MatExpr((ZERO, cos(arg), sin(arg), ZERO))


def expand_N(g: Expr, gt: Expr) -> MatExpr:
    """N = G + sigma_3 G~."""
    return MatExpr((g, ZERO, ZERO, gt))


def expand_F(phi: Expr, phit: Expr) -> MatExpr:
    """F = Phi + i sigma_3 Phi~."""
    return MatExpr((phi, ZERO, ZERO, mul(I_UNIT, phit)))


def simplify_mat(A: MatExpr) -> MatExpr:
    return A.map(simplify)


PAULI_MATRICES = np.array([[[1, 0], [0, 1]], [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
                          dtype=complex)


def numeric_matrices(values: np.ndarray) -> np.ndarray:
    """Explicit 2x2 matrices from evaluated components of shape (4, N) -> (N, 2, 2)."""
    c0, c1, c2, c3 = values
    out = np.empty((values.shape[1], 2, 2), dtype=complex)
    out[:, 0, 0] = c0 + c3
    out[:, 0, 1] = c1 - 1j * c2
    out[:, 1, 0] = c1 + 1j * c2
    out[:, 1, 1] = c0 - c3
    return out
