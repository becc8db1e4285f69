"""Structure constants, isomorphism invariants and label matching for symmetry algebras."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .diffop import DiffOp, ProjectionError, as_diffop, commutator, project
from .expr import ExprError, ParamTable
from .pauli import as_mat
from .sampling import draw_valid

RANK_TOL = 1e-8
CLOSURE_TOL = 1e-7


class ClosureError(ExprError):
    def __init__(self, message: str, pair: tuple[str, str] | None = None, residual: float = float("nan")):
        super().__init__(message)
        self.pair = pair
        self.residual = residual


# ---------------------------------------------------------------------------
# structure constants
# ---------------------------------------------------------------------------
@dataclass
class StructureConstants:
    """``[e_i, e_j] = sum_k c[i, j, k] e_k``."""

    labels: list[str]
    c: np.ndarray
    closure_residual: float = 0.0
    phase: complex = 1.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=complex)
        d = len(self.labels)
        if self.c.shape != (d, d, d):
            raise ValueError(f"structure constants must have shape {(d, d, d)}, got {self.c.shape}")

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.c), initial=0.0))

    def is_real(self, tol: float = RANK_TOL) -> bool:
        return float(np.max(np.abs(self.c.imag), initial=0.0)) <= tol * max(1.0, self.norm)

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.c)

    def antisymmetry_residual(self) -> float:
        return float(np.max(np.abs(self.c + self.c.transpose(1, 0, 2)), initial=0.0))

    def jacobi_residual(self) -> float:
        # J[i,j,k,l] = c_ij^m c_mk^l + cyclic
        t = np.einsum("ijm,mkl->ijkl", self.c, self.c)
        J = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
        return float(np.max(np.abs(J), initial=0.0))

    def change_basis(self, T: np.ndarray, labels: Sequence[str] | None = None) -> "StructureConstants":
        """New basis ``e'_i = sum_j T[i, j] e_j``."""
        T = np.asarray(T)
        Tinv = np.linalg.inv(T)
        c = np.einsum("ia,jb,abm,mk->ijk", T, T, self.c, Tinv)
        labs = list(labels) if labels is not None else [f"e{i + 1}'" for i in range(self.dim)]
        return StructureConstants(labs, c, self.closure_residual, self.phase)

    def realified(self, tol: float = RANK_TOL) -> "StructureConstants":
        """Multiply every basis vector by one phase so that the constants become real.

        Scaling ``e -> lam e`` scales ``c`` by ``lam``.  Returns ``self`` unchanged
        when no global phase does the job.
        """
        if self.dim == 0 or self.norm == 0.0:
            return StructureConstants(self.labels, self.c.real.astype(complex), self.closure_residual, 1.0)
        flat = self.c.ravel()
        big = flat[np.argmax(np.abs(flat))]
        lam = np.conj(big) / abs(big)
        c = self.c * lam
        if float(np.max(np.abs(c.imag))) <= tol * max(1.0, self.norm):
            return StructureConstants(self.labels, c.real.astype(complex), self.closure_residual,
                                      self.phase * lam)
        return self

    def direct_sum(self, other: "StructureConstants") -> "StructureConstants":
        d1, d2 = self.dim, other.dim
        c = np.zeros((d1 + d2,) * 3, dtype=complex)
        c[:d1, :d1, :d1] = self.c
        c[d1:, d1:, d1:] = other.c
        return StructureConstants(self.labels + other.labels, c)

    def nonzero(self, tol: float = 1e-12) -> list[tuple[int, int, int, complex]]:
        idx = np.argwhere(np.abs(self.c) > tol)
        return [(int(i), int(j), int(k), complex(self.c[i, j, k])) for i, j, k in idx]

    def to_json(self) -> dict:
        return {"dim": self.dim, "labels": list(self.labels),
                "c": [[i, j, k, v.real, v.imag] for i, j, k, v in self.nonzero()]}

    @classmethod
    def from_json(cls, data: Mapping) -> "StructureConstants":
        d = int(data["dim"])
        c = np.zeros((d, d, d), dtype=complex)
        for i, j, k, re_, im in data["c"]:
            c[i, j, k] = complex(re_, im)
        labels = list(data.get("labels") or [f"e{i + 1}" for i in range(d)])
        return cls(labels, c)

    @classmethod
    def from_brackets(cls, dim: int, brackets: Mapping[tuple[int, int], Mapping[int, float]],
                      labels: Sequence[str] | None = None) -> "StructureConstants":
        """Build from 1-based ``{(i, j): {k: value}}`` with antisymmetry filled in."""
        c = np.zeros((dim, dim, dim), dtype=complex)
        for (i, j), out in brackets.items():
            for k, v in out.items():
                c[i - 1, j - 1, k - 1] += v
                c[j - 1, i - 1, k - 1] -= v
        return cls(list(labels) if labels else [f"e{i + 1}" for i in range(dim)], c)


def _ops(basis) -> list[tuple[str, DiffOp]]:
    out = []
    for b in basis:
        if hasattr(b, "op"):
            out.append((getattr(b, "name", str(b)), b.op))
        else:
            op = as_diffop(b)
            out.append((repr(b), op))
    return out


def structure_constants(basis, params: Mapping | None = None, seed: int = 0, samples: int = 20,
                        closure_tol: float = CLOSURE_TOL) -> StructureConstants:
    """Project every commutator of the basis back onto the basis.

    Raises ``ClosureError`` naming the first pair whose commutator leaves the
    span (relative residual >= ``closure_tol``), or when the basis is dependent.
    """
    named = _ops(basis)
    d = len(named)
    table = params if isinstance(params, ParamTable) else ParamTable(params or {})
    comms: dict[tuple[int, int], DiffOp] = {}
    for i in range(d):
        for j in range(i + 1, d):
            comms[i, j] = commutator(named[i][1], named[j][1])
    exprs = []
    for _, op in named:
        for m in op.coeffs.values():
            exprs.extend(as_mat(m).c)
    for op in comms.values():
        for m in op.coeffs.values():
            exprs.extend(as_mat(m).c)
    sample = draw_valid(exprs, n=samples, seed=seed, params=table.numeric())
    ops = [op for _, op in named]
    c = np.zeros((d, d, d), dtype=complex)
    worst = 0.0
    for (i, j), op in comms.items():
        if op.is_zero():
            continue
        try:
            proj = project(op, ops, sample)
        except ProjectionError as exc:
            names = [named[k][0] for k in exc.degenerate]
            raise ClosureError(f"basis is linearly dependent: {names}") from None
        scale = 1.0 + float(np.max(np.abs(op.evaluate(sample)), initial=0.0))
        rel = proj.residual / scale
        if rel >= closure_tol:
            raise ClosureError(f"[{named[i][0]}, {named[j][0]}] is not in the span (residual {rel:.2e})",
                               (named[i][0], named[j][0]), rel)
        worst = max(worst, rel)
        coef = np.where(np.abs(proj.coefficients) < 1e-12, 0.0, proj.coefficients)
        c[i, j] = coef
        c[j, i] = -coef
    return StructureConstants([n for n, _ in named], c, worst)


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------
def _rank(M: np.ndarray, scale: float, tol: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, scale)))


def _span(vectors: np.ndarray, scale: float, tol: float) -> np.ndarray:
    """Orthonormal rows spanning ``vectors`` (rows)."""
    if vectors.size == 0:
        return np.zeros((0, vectors.shape[-1] if vectors.ndim == 2 else 0), dtype=complex)
    u, s, vh = np.linalg.svd(vectors, full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, scale)))
    return vh[:r]


def _bracket_space(sc: StructureConstants, U: np.ndarray, W: np.ndarray, tol: float) -> np.ndarray:
    if U.shape[0] == 0 or W.shape[0] == 0:
        return np.zeros((0, sc.dim), dtype=complex)
    prods = np.einsum("ai,bj,ijk->abk", U, W, sc.c).reshape(-1, sc.dim)
    return _span(prods, sc.norm, tol)


@dataclass(frozen=True)
class Fingerprint:
    dim: int
    derived: tuple[int, ...]
    lower_central: tuple[int, ...]
    center: int
    abelianization: int
    killing_rank: int
    killing_signature: tuple[int, int] | None
    solvable: bool
    nilpotent: bool

    @property
    def semisimple(self) -> bool:
        return self.dim > 0 and self.killing_rank == self.dim

    def to_json(self) -> dict:
        return {
            "dim": self.dim, "derived_series": list(self.derived),
            "lower_central_series": list(self.lower_central), "center": self.center,
            "abelianization": self.abelianization, "killing_rank": self.killing_rank,
            "killing_signature": list(self.killing_signature) if self.killing_signature else None,
            "solvable": self.solvable, "nilpotent": self.nilpotent,
        }

    def short(self) -> str:
        sig = self.killing_signature
        kind = "nilpotent" if self.nilpotent else "solvable" if self.solvable else "non-solvable"
        return (f"dim {self.dim}, {kind}, derived {list(self.derived)}, lcs {list(self.lower_central)}, "
                f"center {self.center}, killing rank {self.killing_rank}"
                + (f" sig {sig[0]}+/{sig[1]}-" if sig else ""))


def killing_form(sc: StructureConstants) -> np.ndarray:
    # (ad_i)_{kj} = c[i, j, k]
    ad = sc.c.transpose(0, 2, 1)
    return np.einsum("ikj,ljk->il", ad, ad)


def fingerprint(sc: StructureConstants, tol: float = RANK_TOL) -> Fingerprint:
    sc = sc.realified()
    d = sc.dim
    full = np.eye(d, dtype=complex)

    derived = [d]
    cur = full
    while cur.shape[0] > 0:
        nxt = _bracket_space(sc, cur, cur, tol)
        if nxt.shape[0] == cur.shape[0]:
            break
        derived.append(nxt.shape[0])
        cur = nxt
    lcs = [d]
    cur = full
    while cur.shape[0] > 0:
        nxt = _bracket_space(sc, full, cur, tol)
        if nxt.shape[0] == cur.shape[0]:
            break
        lcs.append(nxt.shape[0])
        cur = nxt

    # center: z with sum_i z_i c[i, j, k] = 0 for all j, k
    center = d - _rank(sc.c.reshape(d, d * d).T, sc.norm, tol) if d else 0
    comm_dim = derived[1] if len(derived) > 1 else d
    K = killing_form(sc)
    kscale = float(np.max(np.abs(K), initial=0.0))
    krank = _rank(K, kscale, tol)
    sig = None
    if sc.is_real():
        Kr = (K.real + K.real.T) / 2
        ev = np.linalg.eigvalsh(Kr) if d else np.zeros(0)
        thr = tol * max(1.0, kscale)
        sig = (int(np.sum(ev > thr)), int(np.sum(ev < -thr)))
    return Fingerprint(d, tuple(derived), tuple(lcs), center, d - comm_dim, krank, sig,
                       derived[-1] == 0, lcs[-1] == 0)


# ---------------------------------------------------------------------------
# labels
# ---------------------------------------------------------------------------
def _split_components(label: str) -> list[str]:
    s = label.replace(" ", "").replace("⊕", "+").replace("⊕", "+")
    out, depth, cur = [], 0, ""
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "+" and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    if cur:
        out.append(cur)
    return out


def components(label: str) -> list[str]:
    """Direct summands with multiplicities expanded: '2n1,1' -> ['n1,1', 'n1,1']."""
    out = []
    for part in _split_components(label):
        m = re.fullmatch(r"(\d+)([a-z].*)", part)
        if m:
            out.extend([m.group(2)] * int(m.group(1)))
        else:
            out.append(part)
    return out


def canonical_label(label: str) -> str:
    parts = components(label)
    counts: dict[str, int] = {}
    for p in parts:
        counts[p] = counts.get(p, 0) + 1
    order = sorted(counts, key=lambda p: (p.startswith("n1,1"), p))
    return "+".join((f"{counts[p]}{p}" if counts[p] > 1 else p) for p in order)


def is_formal(label: str) -> bool:
    lab = label.replace(" ", "")
    if not lab or lab == "-":
        return True
    return bool(re.search(r"s[789],\d|s6,n", lab))


# Small algebras with textbook definitions; everything else is bootstrapped.
_REFERENCE: dict[str, tuple[int, dict]] = {
    "n1,1": (1, {}),
    "n3,1": (3, {(2, 3): {1: 1}}),
    "n4,1": (4, {(2, 4): {1: 1}, (3, 4): {2: 1}}),
    "s2,1": (2, {(2, 1): {1: 1}}),
    "so(3)": (3, {(1, 2): {3: 1}, (2, 3): {1: 1}, (3, 1): {2: 1}}),
    "sl(2,R)": (3, {(1, 2): {2: 2}, (1, 3): {3: -2}, (2, 3): {1: 1}}),
    "s4,6": (4, {(2, 3): {1: 1}, (2, 4): {2: 1}, (3, 4): {3: -1}}),
    "s4,7": (4, {(2, 3): {1: 1}, (2, 4): {3: -1}, (3, 4): {2: 1}}),
}


def reference_algebra(label: str) -> StructureConstants:
    dim, br = _REFERENCE[label]
    return StructureConstants.from_brackets(dim, br, [f"{label}:{i + 1}" for i in range(dim)])


@dataclass
class CatalogEntry:
    """A label with one or more reference realizations.

    Labels that name a parametric family (bootstrapped from several corpus
    branches) can carry several fingerprints; any of them identifies the label.
    """

    label: str
    sc: StructureConstants
    fingerprint: Fingerprint
    source: str  # reference | composed | row id
    variants: list[tuple[str, Fingerprint]] = field(default_factory=list)

    @property
    def fingerprints(self) -> list[Fingerprint]:
        return [self.fingerprint] + [fp for _, fp in self.variants]


@dataclass
class Catalog:
    entries: dict[str, CatalogEntry] = field(default_factory=dict)

    def add(self, label: str, sc: StructureConstants, source: str) -> CatalogEntry:
        key = canonical_label(label)
        fp = fingerprint(sc)
        old = self.entries.get(key)
        if old is not None:
            if fp not in old.fingerprints:
                old.variants.append((source, fp))
            return old
        entry = CatalogEntry(key, sc, fp, source)
        self.entries[key] = entry
        return entry

    def get(self, label: str) -> CatalogEntry | None:
        return self.entries.get(canonical_label(label))

    def compose(self, label: str) -> StructureConstants | None:
        """Direct sum built from catalogued summands, if all are known."""
        parts = components(label)
        if len(parts) < 2:
            return None
        scs = []
        for p in parts:
            e = self.entries.get(canonical_label(p))
            if e is None or e.variants:
                return None
            scs.append(e.sc.realified())
        out = scs[0]
        for s in scs[1:]:
            out = out.direct_sum(s)
        return out

    def matches(self, fp: Fingerprint) -> list[str]:
        return sorted(lab for lab, e in self.entries.items() if fp in e.fingerprints)

    def tie_groups(self) -> list[list[str]]:
        groups: dict[Fingerprint, set[str]] = {}
        for lab, e in self.entries.items():
            for fp in e.fingerprints:
                groups.setdefault(fp, set()).add(lab)
        return sorted({tuple(sorted(g)) for g in groups.values() if len(g) > 1})


def base_catalog() -> Catalog:
    cat = Catalog()
    for lab in _REFERENCE:
        cat.add(lab, reference_algebra(lab), "reference")
    return cat


@lru_cache(maxsize=4)
def corpus_catalog(seed: int = 42) -> Catalog:
    """Reference algebras plus labels bootstrapped from the corpus generator lists.

    A label that is a direct sum of known labels is composed and never taken
    from a row, so the rows carrying it are a genuine test.  Any other label is
    bootstrapped from every corpus branch that carries it.
    """
    from .corpus import load, row_seed
    from .generators import NamedGenerator, make_basis_generator

    cat = base_catalog()
    pending: list[tuple[str, str, list, ParamTable, int]] = []
    for row in load():
        for branch, params in row.branches():
            if branch is None or is_formal(branch.label):
                continue
            key = canonical_label(branch.label)
            if key in _REFERENCE:
                continue
            V, table, phs = row.build(params)
            gens = row.generators(params, phs)
            basis = [make_basis_generator("P0"), make_basis_generator("I")]
            basis += [NamedGenerator(s.text, op) for s, op in gens]
            pending.append((key, row.id, basis, table, row_seed(seed, row)))

    def composable(key: str) -> bool:
        return all(canonical_label(p) in cat.entries or any(canonical_label(p) == k for k, *_ in pending)
                   for p in components(key)) and len(components(key)) > 1

    # single summands first, then direct sums of known pieces, then leftovers
    for key, rid, basis, table, rs in pending:
        if len(components(key)) == 1:
            try:
                cat.add(key, structure_constants(basis, table, seed=rs), rid)
            except ClosureError:
                pass
    for key, *_ in pending:
        if key not in cat.entries:
            sc = cat.compose(key)
            if sc is not None:
                cat.add(key, sc, "composed")
    for key, rid, basis, table, rs in pending:
        e = cat.entries.get(key)
        if e is not None and e.source == "composed":
            continue
        if composable(key) and cat.compose(key) is not None:
            continue
        try:
            cat.add(key, structure_constants(basis, table, seed=rs), rid)
        except ClosureError:
            pass
    return cat


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------
@dataclass
class Classification:
    status: str  # unique | tie | unknown
    label: str | None
    candidates: list[str]
    fingerprint: Fingerprint

    def to_json(self) -> dict:
        return {"status": self.status, "label": self.label, "candidates": self.candidates,
                "fingerprint": self.fingerprint.to_json()}


def classify(sc: StructureConstants, catalog: Catalog | None = None) -> Classification:
    catalog = catalog if catalog is not None else corpus_catalog()
    fp = fingerprint(sc)
    cands = catalog.matches(fp)
    if len(cands) == 1:
        return Classification("unique", cands[0], cands, fp)
    if cands:
        return Classification("tie", None, cands, fp)
    return Classification("unknown", None, [], fp)


@dataclass
class BranchOutcome:
    status: str  # match | tie | formal | mismatch | not-closed
    label: str | None
    detail: str
    fingerprint: Fingerprint | None = None


def classify_generators(basis, params=None, expected: str | None = None, seed: int = 0,
                        catalog: Catalog | None = None) -> BranchOutcome:
    try:
        sc = structure_constants(basis, params, seed=seed)
    except ClosureError as exc:
        return BranchOutcome("not-closed", None, str(exc))
    fp = fingerprint(sc)
    if expected is not None and is_formal(expected):
        return BranchOutcome("formal", None, fp.short(), fp)
    res = classify(sc, catalog)
    found = res.label or (" | ".join(res.candidates) if res.candidates else None)
    if expected is None:
        return BranchOutcome(res.status, found, fp.short(), fp)
    want = canonical_label(expected)
    if want in res.candidates:
        status = "match" if res.status == "unique" else "tie"
        return BranchOutcome(status, found, fp.short(), fp)
    return BranchOutcome("mismatch", found, fp.short(), fp)


def classify_json(sc: StructureConstants, catalog: Catalog | None = None) -> str:
    res = classify(sc, catalog)
    out = res.to_json()
    out["structure_constants"] = sc.to_json()
    return json.dumps(out, sort_keys=True)


def random_basis_change(d: int, rng: np.random.Generator, cond_max: float = 50.0) -> np.ndarray:
    while True:
        T = rng.normal(size=(d, d))
        if np.linalg.cond(T) < cond_max:
            return T


__all__ = [
    "BranchOutcome",
    "Catalog",
    "CatalogEntry",
    "Classification",
    "ClosureError",
    "Fingerprint",
    "StructureConstants",
    "base_catalog",
    "canonical_label",
    "classify",
    "classify_generators",
    "components",
    "corpus_catalog",
    "fingerprint",
    "is_formal",
    "killing_form",
    "random_basis_change",
    "reference_algebra",
    "structure_constants",
]
