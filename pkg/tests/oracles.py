"""Independent numeric oracles shared by the test modules."""
from __future__ import annotations

import numpy as np

from spsym.expr import (X1, X2, X3, T, Expr, atan2, const, cos, exp, func, ln, param, placeholder,
                        power, sin, sqrt)
from spsym.sampling import PointSample

PAULI = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

LEAVES = (T, X1, X2, X3)


def random_tree(rng: np.random.Generator, depth: int) -> Expr:
    """Random expression that stays finite on the sampling domain."""
    if depth <= 0 or rng.random() < 0.2:
        k = rng.integers(0, 7)
        if k < 4:
            return LEAVES[k]
        if k == 4:
            return const(int(rng.integers(-3, 4)) or 1)
        if k == 5:
            return param("kappa")
        return placeholder("G", (X1, X2))
    kind = rng.integers(0, 10)
    a = random_tree(rng, depth - 1)
    if kind == 0:
        return a + random_tree(rng, depth - 1)
    if kind == 1:
        return a - random_tree(rng, depth - 1)
    if kind == 2:
        return a * random_tree(rng, depth - 1)
    if kind == 3:
        return power(a, int(rng.integers(2, 4)))
    if kind == 4:
        return sin(a)
    if kind == 5:
        return cos(a)
    if kind == 6:
        # bounded argument keeps exp moderate
        return exp(sin(a))
    if kind == 7:
        return ln(const(2) + cos(a))
    if kind == 8:
        return sqrt(const(1) + a * a) if rng.random() < 0.5 else func("atan", a)
    return a / (const(2) + sin(random_tree(rng, depth - 1)))


def shifted(sample: PointSample, var: str, h: float) -> PointSample:
    t = sample.t.copy()
    x = sample.x.copy()
    if var == "t":
        t = t + h
    else:
        x[:, int(var[1]) - 1] += h
    return PointSample(t, x, sample.params, sample.placeholders, sample.seed)


def _central(e: Expr, var: str, sample: PointSample, h: float) -> np.ndarray:
    return (shifted(sample, var, h).eval(e) - shifted(sample, var, -h).eval(e)) / (2 * h)


def central_difference(e: Expr, var: str, sample: PointSample, h: float = 1e-5) -> np.ndarray:
    """Central difference at step h, Richardson-extrapolated with h/2 to cancel the h^2 term."""
    return (4 * _central(e, var, sample, h / 2) - _central(e, var, sample, h)) / 3


def matrix_values(components: np.ndarray) -> np.ndarray:
    """(4, N) Pauli components -> (N, 2, 2) explicit matrices."""
    return np.einsum("kn,kij->nij", components, PAULI)


def phi_oracle(x: np.ndarray) -> np.ndarray:
    return np.arctan2(x[:, 1], x[:, 0])


def atan2_expr():
    return atan2(X2, X1)
