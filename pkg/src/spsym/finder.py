"""Symmetry discovery for a concrete potential by nullspace extraction.

The condition ``[Q, L] = alpha L`` is linear in ``Q``.  Writing ``Q`` as a
combination of a finite candidate basis turns it into a dense linear system
whose nullspace is the symmetry algebra (restricted to that basis).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .detsys import FrequencyReport, check_consequences, symmetry_defect
from .diffop import DiffOp, ProjectionError, _pooled, project, schrodinger_operator
from .expr import ONE, Expr, ParamTable, T, as_expr, cos, exp, sin
from .generators import NamedGenerator, make_basis_generator
from .pauli import MatExpr, as_mat
from .sampling import PlaceholderInstantiation, draw_valid, instantiate_placeholders

GEOMETRIC = ("P0", "I", "tI", "P1", "P2", "P3", "G1", "G2", "G3", "L1", "L2", "L3", "D", "A")
FREQ_TOL = 1e-9


class IllConditioned(UserWarning):
    pass


@dataclass
class FindConfig:
    samples: int = 40
    seed: int = 42
    threshold: float = 1e-7
    gap: float = 10.0
    degree: int = 3
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass
class CandidateBasis:
    members: list[NamedGenerator]
    frequencies: FrequencyReport
    matrix_profiles: list[str]
    warnings: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def names(self) -> list[str]:
        return [m.name for m in self.members]


def _num(x: float) -> Expr:
    return as_expr(float(x))


def _profile_exprs(freqs: Sequence[tuple[str, float]]) -> list[tuple[str, Expr]]:
    out: list[tuple[str, Expr]] = [("1", ONE), ("t", T)]
    seen = set()
    for kind, w in freqs:
        if w <= FREQ_TOL:
            continue
        key = (kind, round(w, 12))
        if key in seen:
            continue
        seen.add(key)
        W = _num(w)
        if kind == "trigonometric":
            out += [(f"cos({w:.6g}t)", cos(W * T)), (f"sin({w:.6g}t)", sin(W * T))]
        else:
            out += [(f"exp({w:.6g}t)", exp(W * T)), (f"exp(-{w:.6g}t)", exp(-W * T))]
    return out


def instantiate(V, seed: int = 42, degree: int = 3) -> MatExpr:
    """Replace placeholders in ``V`` by fixed random polynomials."""
    inst = PlaceholderInstantiation(seed, degree)
    return as_mat(V).map(lambda e: instantiate_placeholders(e, inst))


def build_candidates(V, params: Mapping | None = None, seed: int = 0) -> CandidateBasis:
    """Geometric, oscillator and matrix blocks for the given (numeric) potential."""
    V = as_mat(V)
    table = params if isinstance(params, ParamTable) else ParamTable(params or {})
    rep = check_consequences(V, table, seed=seed)
    members = [make_basis_generator(n) for n in GEOMETRIC]
    notes: list[str] = []

    # time profiles carried by the scalar generators (axis pairs at w, dilation pair at 2w)
    scalar_freqs: list[tuple[str, float]] = []
    for a, mu in sorted(rep.axis_mu.items()):
        if abs(mu) <= FREQ_TOL:
            continue
        w = float(np.sqrt(abs(mu)))
        sign = "+" if mu < 0 else "-"
        W = _num(w)
        members.append(make_basis_generator(f"B{a}{sign}", (W,)))
        members.append(make_basis_generator(f"Bh{a}{sign}", (W,)))
        scalar_freqs.append(("trigonometric" if mu < 0 else "hyperbolic", w))
    if rep.dilation_mu is not None and abs(rep.dilation_mu) > FREQ_TOL:
        mu = rep.dilation_mu
        w = float(np.sqrt(abs(mu))) / 2
        sign = "+" if mu < 0 else "-"
        W = _num(w)
        members.append(make_basis_generator(f"A{sign}", (W,)))
        members.append(make_basis_generator(f"Ah{sign}", (W,)))
        scalar_freqs.append(("trigonometric" if mu < 0 else "hyperbolic", 2 * w))

    profiles: list[str] = []
    if not V.is_scalar():
        freqs = list(dict.fromkeys(scalar_freqs))
        if rep.vector_norm is not None and rep.vector_norm > FREQ_TOL:
            freqs.append(("trigonometric", 2 * rep.vector_norm))
        elif rep.vector_norm is None:
            notes.append("vector part is not constant: matrix time profiles limited to "
                         "{1, t} and the scalar frequencies")
        for label, p in _profile_exprs(freqs):
            profiles.append(label)
            for b in (1, 2, 3):
                op = DiffOp.multiplication(MatExpr.sigma(b, p))
                members.append(NamedGenerator(f"s{b}*{label}" if label != "1" else f"s{b}", op))
    return CandidateBasis(members, rep, profiles, notes)


@dataclass
class SymmetryAlgebra:
    potential: MatExpr
    candidates: CandidateBasis
    coefficients: np.ndarray  # (dim, n_candidates)
    singular_values: np.ndarray
    params: ParamTable
    warnings: list[str] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return int(self.coefficients.shape[0])

    def operators(self) -> list[DiffOp]:
        ops = []
        for row in self.coefficients:
            acc = DiffOp.zero()
            for c, m in zip(row, self.candidates.members):
                if abs(c) > 1e-12:
                    acc = acc + m.op.scale(as_expr(complex(c)))
            ops.append(acc)
        return ops

    def generators(self) -> list[NamedGenerator]:
        return [NamedGenerator(self.describe(i), op) for i, op in enumerate(self.operators())]

    def describe(self, i: int, tol: float = 1e-9) -> str:
        row = self.coefficients[i]
        k = int(np.argmax(np.abs(row)))
        row = row / row[k]
        terms = []
        for c, name in zip(row, self.candidates.names):
            if abs(c) <= tol:
                continue
            c = complex(round(c.real, 9), round(c.imag, 9))
            cs = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}i)"
            terms.append(name if cs == "1" else f"{cs}*{name}")
        return " + ".join(terms) or "0"

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "generators": [
                {"name": self.describe(i),
                 "coefficients": {n: [round(c.real, 12), round(c.imag, 12)]
                                  for n, c in zip(self.candidates.names, row) if abs(c) > 1e-12}}
                for i, row in enumerate(self.coefficients)
            ],
            "candidates": self.candidates.names,
            "frequencies": self.candidates.frequencies.to_json(),
            "warnings": self.warnings,
        }


def _column_samples(V: MatExpr, members: Sequence[NamedGenerator], cfg: FindConfig, table: ParamTable):
    """Residual columns C_k = [b_k, L] - alpha_k L and per-column scales.

    The scale is the size of the two terms (floored by |b_k| |L|), not of
    their difference, so an exact symmetry keeps its column at round-off level
    instead of being blown up by normalization.
    """
    triples = [symmetry_defect(V, m.op) for m in members]
    exprs = list(V.c)
    for trip in triples:
        for d in trip:
            for c in d.coeffs.values():
                exprs.extend(c.c)
    sample = draw_valid(exprs, n=cfg.samples, seed=cfg.seed, params=table.numeric())
    keys = sorted({k for trip in triples for d in trip for k in d.coeffs})
    L = schrodinger_operator(V)
    l_size = np.linalg.norm(L.evaluate(sample))
    cols, scales = [], []
    for m, (C, QL, aL) in zip(members, triples):
        cols.append(C.evaluate(sample, keys).ravel())
        size = np.linalg.norm(QL.evaluate(sample, keys)) + np.linalg.norm(aL.evaluate(sample, keys))
        # floor: an exactly commuting candidate still has an O(|b| |L|) scale
        size = max(size, np.linalg.norm(m.op.evaluate(sample)) * l_size)
        scales.append(size)
    return np.stack(cols, axis=1), np.asarray(scales), sample


def nullspace(A: np.ndarray, threshold: float = 1e-7, gap: float = 10.0,
              scales: np.ndarray | None = None):
    """Orthonormal nullspace of ``A`` after column scaling, plus a gap diagnostic.

    Columns are divided by ``scales`` (default: their own norms); columns with
    zero scale are left as they are.
    """
    norms = np.linalg.norm(A, axis=0) if scales is None else np.asarray(scales, dtype=float)
    scale = np.where(norms > 0, norms, 1.0)
    An = A / scale
    _, s, vh = np.linalg.svd(An, full_matrices=True)
    n = An.shape[1]
    sv = np.zeros(n)
    sv[: s.size] = s
    smax = sv[0] if sv.size else 0.0
    zero = sv <= threshold * max(smax, 1e-300)
    null = vh[zero].conj()
    warn = None
    if zero.any() and (~zero).any():
        smallest_kept = sv[~zero].min()
        largest_zero = sv[zero].max()
        if largest_zero > 0 and smallest_kept / largest_zero < gap:
            warn = (f"singular-value gap {smallest_kept / largest_zero:.3g} is below {gap:g}; "
                    "increase samples")
    elif (~zero).any():
        smallest_kept = sv[~zero].min()
        if smallest_kept < gap * threshold * max(smax, 1e-300):
            warn = "smallest singular value is close to the threshold; increase samples"
    # back to coefficients of the original candidates
    coef = null / scale
    if coef.size:
        q, _ = np.linalg.qr(coef.T)
        coef = q.T
    return coef, sv, warn


def find_symmetries(V, cfg: FindConfig | None = None, params: Mapping | None = None) -> SymmetryAlgebra:
    """All symmetries of ``L = i d_t + Lap/2 - V`` in the span of the candidate basis."""
    cfg = cfg or FindConfig()
    table = ParamTable(params if params is not None else cfg.params)
    V = as_mat(V)
    if free_symbols_placeholders(V):
        V = instantiate(V, cfg.seed, cfg.degree)
    cand = build_candidates(V, table, seed=cfg.seed)
    A, scales, _ = _column_samples(V, cand.members, cfg, table)
    coef, sv, warn = nullspace(A, cfg.threshold, cfg.gap, scales)
    notes = list(cand.warnings)
    if warn:
        notes.append(warn)
        warnings.warn(warn, IllConditioned, stacklevel=2)
    coef = _canonical_rows(coef)
    return SymmetryAlgebra(V, cand, coef, sv, table, notes)


def _canonical_rows(coef: np.ndarray) -> np.ndarray:
    """Reduced row echelon form: a basis that does not depend on the SVD's rotation."""
    if coef.size == 0:
        return coef
    M = coef.astype(complex).copy()
    rows, cols = M.shape
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        piv = r + int(np.argmax(np.abs(M[r:, c])))
        if abs(M[piv, c]) < 1e-8:
            continue
        M[[r, piv]] = M[[piv, r]]
        M[r] /= M[r, c]
        for k in range(rows):
            if k != r:
                M[k] -= M[k, c] * M[r]
        r += 1
    M[np.abs(M) < 1e-12] = 0
    return M[:r]


def free_symbols_placeholders(V: MatExpr):
    from .expr import Placeholder, PlaceholderDerivative

    out = []
    for e in V.c:
        stack = [e]
        while stack:
            node = stack.pop()
            if isinstance(node, (Placeholder, PlaceholderDerivative)):
                out.append(node)
            stack.extend(node.children())
    return out


def contains(algebra: SymmetryAlgebra, generator, tol: float = 1e-8, samples: int = 30,
             seed: int = 7) -> bool:
    return containment_residual(algebra, generator, samples, seed) < tol


def containment_residual(algebra: SymmetryAlgebra, generator, samples: int = 30, seed: int = 7) -> float:
    """Relative residual of projecting ``generator`` onto the span of ``algebra``."""
    op = generator.op if hasattr(generator, "op") else generator
    ops = algebra.operators()
    exprs = []
    for o in ops + [op]:
        for c in o.coeffs.values():
            exprs.extend(c.c)
    sample = draw_valid(exprs, n=samples, seed=seed, params=algebra.params.numeric())
    scale = 1.0 + float(np.max(np.abs(op.evaluate(sample)), initial=0.0))
    if not ops:
        return (scale - 1.0) / scale
    try:
        return project(op, ops, sample).residual / scale
    except ProjectionError:
        pass
    # dependent rows: project onto the numerical range instead
    pooled = _pooled([op] + ops, sample)
    target, A = pooled[0], pooled[1:].T
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    u = u[:, s > 1e-10 * max(s[0], 1e-300)]
    resid = target - u @ (u.conj().T @ target)
    return float(np.max(np.abs(resid), initial=0.0)) / scale


__all__ = [
    "CandidateBasis",
    "FindConfig",
    "IllConditioned",
    "SymmetryAlgebra",
    "build_candidates",
    "contains",
    "containment_residual",
    "find_symmetries",
    "instantiate",
    "nullspace",
]
