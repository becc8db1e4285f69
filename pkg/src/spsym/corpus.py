"""Golden corpus of classified potentials, their generators and algebra labels.

Each ``*.corpus`` file in ``spsym/data`` is plain text::

    # Table 1, Item 1
    [T1.1]
    potential = G(rt, x3) + kappa*phi
    placeholders = G/2
    symmetry = L3 + kappa*t
    symmetry = G3 @ n=0            # present only on that branch
    algebra = n3,1 @ kappa!=0
    algebra = 3n1,1 @ kappa=0
    witness = kappa=0.7
    flags = star
    note = free text

``@`` conditions are comma-separated ``name=value`` / ``name!=value`` tests.
An ``=`` condition on an algebra line also *selects* the branch: its
parameters are set to that value on top of the row witness.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .expr import ParamTable
from .parsing import Scope, parse_generator, parse_pauli_scoped, parse_placeholder_decls
from .pauli import MatExpr

DEFAULT_WITNESS = {"kappa": 0.7, "omega": 1.3, "n": 1.0, "mu": 0.4, "nu": 0.3,
                   "lambda": 0.8, "k": 0.6, "eps": 1.0, "eps1": 1.0, "eps2": 1.0, "eps3": 1.0,
                   "omega1": 1.3, "omega2": 0.9, "omega3": 1.1}

KNOWN_KEYS = {"potential", "placeholders", "symmetry", "algebra", "witness", "flags", "note",
              "constraints"}


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Condition:
    name: str
    op: str  # "=" or "!="
    value: float

    def holds(self, params: Mapping[str, float | None]) -> bool:
        v = params.get(self.name)
        if v is None:
            return False
        same = abs(float(v) - self.value) <= 1e-12
        return same if self.op == "=" else not same

    def __str__(self):
        return f"{self.name}{self.op}{self.value:g}"


def parse_conditions(text: str) -> tuple[Condition, ...]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        m = re.fullmatch(r"([A-Za-z_][A-Za-z_0-9]*)\s*(!=|=)\s*([-+]?\d+(?:\.\d*)?)", item)
        if not m:
            raise CorpusError(f"bad condition {item!r}")
        out.append(Condition(m.group(1), m.group(2), float(m.group(3))))
    return tuple(out)


def _split_at(value: str) -> tuple[str, tuple[Condition, ...]]:
    if "@" in value:
        body, cond = value.split("@", 1)
        return body.strip(), parse_conditions(cond)
    return value.strip(), ()


@dataclass(frozen=True)
class Symmetry:
    text: str
    when: tuple[Condition, ...] = ()

    def active(self, params) -> bool:
        return all(c.holds(params) for c in self.when)


@dataclass(frozen=True)
class AlgebraBranch:
    label: str
    when: tuple[Condition, ...] = ()

    def params(self, base: Mapping[str, float]) -> dict[str, float]:
        out = dict(base)
        for c in self.when:
            if c.op == "=":
                out[c.name] = c.value
        return out

    def consistent(self, params) -> bool:
        return all(c.holds(params) for c in self.when)

    @property
    def formal(self) -> bool:
        return is_formal_label(self.label)


def is_formal_label(label: str) -> bool:
    """Labels without catalog data: dimension >= 7 solvable families, s6,n, blanks."""
    from .liealg import is_formal

    return is_formal(label)


@dataclass
class CorpusRow:
    id: str
    table: int
    item: int
    potential: str
    placeholders: dict[str, int] = field(default_factory=dict)
    symmetries: list[Symmetry] = field(default_factory=list)
    algebras: list[AlgebraBranch] = field(default_factory=list)
    witness: dict[str, float] = field(default_factory=dict)
    flags: set[str] = field(default_factory=set)
    notes: list[str] = field(default_factory=list)
    source: str = ""

    def base_params(self) -> dict[str, float]:
        out = dict(DEFAULT_WITNESS)
        out.update(self.witness)
        return out

    def branches(self) -> list[tuple[AlgebraBranch | None, dict[str, float]]]:
        """Parameter instantiations to test: one per algebra branch (or the witness)."""
        base = self.base_params()
        if not self.algebras:
            return [(None, base)]
        return [(b, b.params(base)) for b in self.algebras]

    def build(self, params: Mapping[str, float]) -> tuple[MatExpr, ParamTable, dict[str, int]]:
        table = ParamTable(params)
        scope = Scope(table, dict(self.placeholders), pauli=True)
        V = parse_pauli_scoped(self.potential, scope)
        return V, table, scope.placeholders

    def generators(self, params: Mapping[str, float], placeholders: Mapping[str, int]):
        table = ParamTable(params)
        return [(s, parse_generator(s.text, table, placeholders))
                for s in self.symmetries if s.active(params)]


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------
def parse_corpus_text(text: str, source: str = "<string>") -> list[CorpusRow]:
    rows: list[CorpusRow] = []
    cur: CorpusRow | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[(T(\d+)\.(\d+)|X\.(\w+))\]", line)
        if m:
            if m.group(2):
                cur = CorpusRow(m.group(1), int(m.group(2)), int(m.group(3)), "", source=source)
            else:
                cur = CorpusRow(m.group(1), 0, len(rows) + 1, "", source=source)
            rows.append(cur)
            continue
        if cur is None:
            raise CorpusError(f"{source}:{lineno}: field outside a row")
        if "=" not in line:
            raise CorpusError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise CorpusError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            if key == "potential":
                cur.potential = value
            elif key == "placeholders":
                cur.placeholders.update(parse_placeholder_decls(value))
            elif key == "symmetry":
                body, cond = _split_at(value)
                cur.symmetries.append(Symmetry(body, cond))
            elif key == "algebra":
                body, cond = _split_at(value)
                cur.algebras.append(AlgebraBranch(body, cond))
            elif key == "witness":
                for c in parse_conditions(value):
                    cur.witness[c.name] = c.value
            elif key == "flags":
                cur.flags.update(f.strip() for f in value.split(",") if f.strip())
            elif key == "note":
                cur.notes.append(value)
            elif key == "constraints":
                cur.notes.append("constraint: " + value)
        except (ValueError, CorpusError) as exc:
            raise CorpusError(f"{source}:{lineno}: {exc}") from None
    for row in rows:
        if not row.potential:
            raise CorpusError(f"{source}: row {row.id} has no potential")
    return rows


def data_files() -> list[Path]:
    base = resources.files("spsym") / "data"
    return sorted(Path(str(p)) for p in base.iterdir() if str(p).endswith(".corpus"))


def load(paths: Iterable[Path] | None = None, include_extra: bool = True) -> list[CorpusRow]:
    rows: list[CorpusRow] = []
    for p in paths if paths is not None else data_files():
        p = Path(p)
        if not include_extra and not p.name.startswith("table"):
            continue
        rows.extend(parse_corpus_text(p.read_text(encoding="utf-8"), p.name))
    seen: dict[str, str] = {}
    for r in rows:
        if r.id in seen:
            raise CorpusError(f"row {r.id} appears in {seen[r.id]} and {r.source}")
        seen[r.id] = r.source
    return rows


def find_row(rows: list[CorpusRow], table: int, item: int) -> CorpusRow:
    for r in rows:
        if r.table == table and r.item == item:
            return r
    raise KeyError(f"no corpus row T{table}.{item}")


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------
@dataclass
class RunConfig:
    seed: int = 42
    samples: int = 20
    tol: float = 1e-9
    test_functions: int = 1
    classify: bool = True
    find: bool = False


@dataclass
class GeneratorResult:
    generator: str
    branch: str
    passed: bool
    residual: float


@dataclass
class BranchResult:
    label: str
    condition: str
    params: dict[str, float]
    status: str  # match | formal | tie | mismatch | not-closed | skipped
    found: str | None = None
    detail: str = ""


@dataclass
class RowReport:
    id: str
    passed: bool
    seconds: float
    generators: list[GeneratorResult]
    branches: list[BranchResult]
    notes: list[str]
    finder: dict | None = None

    def to_json(self) -> dict:
        out = {
            "id": self.id, "pass": self.passed, "seconds": round(self.seconds, 3),
            "generators": [dict(g.__dict__) for g in self.generators],
            "algebras": [dict(b.__dict__) for b in self.branches],
            "notes": self.notes,
        }
        if self.finder is not None:
            out["finder"] = self.finder
        return out


def row_seed(master: int, row: CorpusRow) -> int:
    return (master * 1_000_003 + row.table * 1000 + row.item) % (2 ** 63)


def run_row(row: CorpusRow, cfg: RunConfig | None = None) -> RowReport:
    """Verify every listed generator on every branch; classify each branch's algebra."""
    from .detsys import VerifyConfig, verify_operator
    from .generators import make_basis_generator

    cfg = cfg or RunConfig()
    t0 = time.perf_counter()
    seed = row_seed(cfg.seed, row)
    results: list[GeneratorResult] = []
    branches: list[BranchResult] = []
    for branch, params in row.branches():
        cond = ", ".join(str(c) for c in branch.when) if branch else ""
        V, table, phs = row.build(params)
        gens = row.generators(params, phs)
        vcfg = VerifyConfig(samples=cfg.samples, seed=seed, tol=cfg.tol,
                            test_functions=cfg.test_functions, params=table)
        for sym, op in gens:
            rep = verify_operator(V, op, vcfg)
            worst = max(rep.residuals.values()) if rep.residuals else 0.0
            results.append(GeneratorResult(sym.text, cond, rep.passed, worst))
        if branch is None:
            continue
        if not cfg.classify:
            branches.append(BranchResult(branch.label, cond, params, "skipped"))
            continue
        from .liealg import classify_generators

        basis = [make_basis_generator("P0"), make_basis_generator("I")]
        from .generators import NamedGenerator

        basis += [NamedGenerator(s.text, op) for s, op in gens]
        outcome = classify_generators(basis, table, expected=branch.label, seed=seed)
        branches.append(BranchResult(branch.label, cond, params, outcome.status,
                                     outcome.label, outcome.detail))
    finder = None
    if cfg.find:
        finder = _finder_check(row, cfg, seed)
    passed = all(g.passed for g in results)
    return RowReport(row.id, passed, time.perf_counter() - t0, results, branches, list(row.notes), finder)


def _finder_check(row: CorpusRow, cfg: RunConfig, seed: int) -> dict:
    """Compare the finder's dimension on a generic instantiation with the listed count."""
    from .finder import FindConfig, contains, find_symmetries

    params = row.base_params()
    V, table, phs = row.build(params)
    gens = row.generators(params, phs)
    alg = find_symmetries(V, FindConfig(seed=cfg.seed), params=table)
    listed = 2 + len(gens)
    missing = [s.text for s, op in gens if not contains(alg, op)]
    if missing:
        status = "missing"
    elif alg.dimension > listed:
        status = "flagged"
    else:
        status = "ok"
    return {"status": status, "found": alg.dimension, "listed": listed, "missing": missing,
            "warnings": alg.warnings}


@dataclass
class CorpusSummary:
    rows: list[RowReport]
    seconds: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def counts(self) -> dict[str, int]:
        out = {"rows": len(self.rows), "rows_pass": sum(r.passed for r in self.rows),
               "generators": sum(len(r.generators) for r in self.rows),
               "generators_pass": sum(g.passed for r in self.rows for g in r.generators)}
        for r in self.rows:
            for b in r.branches:
                out["algebra_" + b.status] = out.get("algebra_" + b.status, 0) + 1
        return out

    def to_json(self) -> dict:
        return {"pass": self.passed, "seconds": round(self.seconds, 3), "summary": self.counts(),
                "rows": [r.to_json() for r in self.rows]}


def run_all(cfg: RunConfig | None = None, rows: list[CorpusRow] | None = None,
            table: int | None = None, item: int | None = None, jobs: int = 1) -> CorpusSummary:
    cfg = cfg or RunConfig()
    rows = rows if rows is not None else load()
    if table is not None:
        rows = [r for r in rows if r.table == table]
    if item is not None:
        rows = [r for r in rows if r.item == item]
    t0 = time.perf_counter()
    if jobs > 1 and len(rows) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_row, rows, [cfg] * len(rows)))
    else:
        reports = [run_row(r, cfg) for r in rows]
    return CorpusSummary(reports, time.perf_counter() - t0)


__all__ = [
    "AlgebraBranch",
    "CorpusError",
    "CorpusRow",
    "CorpusSummary",
    "RowReport",
    "RunConfig",
    "find_row",
    "is_formal_label",
    "load",
    "parse_corpus_text",
    "run_all",
    "run_row",
]
