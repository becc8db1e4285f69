"""Command-line entry point.  Every subcommand prints one JSON document.

Exit status: 0 on success, 1 when a verification or classification fails,
2 on bad usage or unreadable input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

log = logging.getLogger("spsym")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser, samples: int) -> None:
    p.add_argument("--seed", type=int, default=42, help="master random seed (default 42)")
    p.add_argument("--samples", type=int, default=samples, help=f"sample points (default {samples})")
    p.add_argument("--tol", type=float, default=1e-9, help="relative tolerance (default 1e-9)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--output", type=Path, help="also write the JSON report to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spsym", description="Lie symmetries of Pauli-Schrodinger equations")
    parser.add_argument("-v", "--verbose", action="store_true", help="diagnostics on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check candidate generators against a potential")
    p.add_argument("--potential", type=Path, required=True)
    p.add_argument("--generator", action="append", required=True, help="generator text (repeatable)")
    _add_common(p, 20)

    p = sub.add_parser("find", help="compute the symmetry algebra of a potential")
    p.add_argument("--potential", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=1e-7, help="relative singular-value cutoff")
    _add_common(p, 40)

    p = sub.add_parser("classify", help="structure constants and algebra label of a generator set")
    p.add_argument("--generator", action="append", default=[], help="generator text (repeatable)")
    p.add_argument("--potential", type=Path, help="take parameters and placeholders from this file")
    p.add_argument("--bare", action="store_true", help="do not add P0 and I to the basis")
    p.add_argument("--expect", help="expected label; mismatch gives exit status 1")
    p.add_argument("--table", type=int)
    p.add_argument("--item", type=int)
    _add_common(p, 20)

    p = sub.add_parser("equiv", help="equivalence transformations")
    esub = p.add_subparsers(dest="action", required=True)
    a = esub.add_parser("apply", help="transform a potential (and optionally generators)")
    a.add_argument("--potential", type=Path, required=True)
    a.add_argument("--kind", required=True, choices=["et0", "et01", "et1", "et2", "et3"])
    a.add_argument("--omega", type=float, default=1.0)
    a.add_argument("--kappa", type=float, nargs="+", help="one value (third axis) or three components")
    a.add_argument("--mu", type=float, default=0.0)
    a.add_argument("--nu", type=float, default=0.0)
    a.add_argument("--matrix", type=complex, nargs=4, metavar=("A0", "A1", "A2", "A3"),
                   help="Pauli components of the constant matrix for et0")
    a.add_argument("--normalization", choices=["printed", "scaled"], default="printed")
    a.add_argument("--generator", action="append", default=[], help="generator to carry along (repeatable)")
    _add_common(a, 20)

    p = sub.add_parser("corpus", help="run the tabulated classification rows")
    csub = p.add_subparsers(dest="action", required=True)
    r = csub.add_parser("run")
    r.add_argument("--table", type=int)
    r.add_argument("--item", type=int)
    r.add_argument("--find", action="store_true", help="also compare finder dimensions")
    r.add_argument("--no-classify", action="store_true", help="skip algebra classification")
    r.add_argument("--timings", action="store_true", help="include wall-clock times (not reproducible)")
    _add_common(r, 20)
    csub.add_parser("list")
    return parser


# ---------------------------------------------------------------------------
def _read_potential(path: Path):
    from .parsing import read_potential

    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return read_potential(text)


def _parse_generators(texts: Sequence[str], pf=None):
    from .generators import NamedGenerator
    from .parsing import parse_generator

    params = pf.params if pf is not None else None
    phs = pf.placeholders if pf is not None else None
    return [NamedGenerator(t, parse_generator(t, params, phs)) for t in texts]


def _strip_timings(obj):
    if isinstance(obj, dict):
        return {k: _strip_timings(v) for k, v in obj.items() if k != "seconds"}
    if isinstance(obj, list):
        return [_strip_timings(v) for v in obj]
    return obj


def cmd_verify(args) -> tuple[dict, int]:
    from .detsys import VerifyConfig, verify_operator

    pf = _read_potential(args.potential)
    gens = _parse_generators(args.generator, pf)
    cfg = VerifyConfig(samples=args.samples, seed=args.seed, tol=args.tol, params=pf.params)
    rows = []
    for g in gens:
        rep = verify_operator(pf.potential, g.op, cfg)
        rows.append({"generator": g.name, "pass": rep.passed, "residuals": rep.residuals})
    ok = all(r["pass"] for r in rows)
    out = {"pass": ok, "potential": pf.source, "generators": rows, "seed": args.seed,
           "samples": args.samples, "tol": args.tol}
    return out, EXIT_OK if ok else EXIT_FAIL


def cmd_find(args) -> tuple[dict, int]:
    from .finder import FindConfig, find_symmetries

    pf = _read_potential(args.potential)
    cfg = FindConfig(samples=args.samples, seed=args.seed, threshold=args.threshold)
    alg = find_symmetries(pf.potential, cfg, params=pf.params)
    out = {"potential": pf.source, "seed": args.seed, **alg.to_json()}
    return out, EXIT_OK


def cmd_classify(args) -> tuple[dict, int]:
    from .generators import make_basis_generator
    from .liealg import ClosureError, classify, structure_constants

    if args.table is not None or args.item is not None:
        return _classify_row(args)
    if not args.generator:
        raise UsageError("classify needs --generator or --table/--item")
    pf = _read_potential(args.potential) if args.potential else None
    gens = _parse_generators(args.generator, pf)
    if not args.bare:
        gens = [make_basis_generator("P0"), make_basis_generator("I")] + gens
    params = pf.params if pf is not None else None
    try:
        sc = structure_constants(gens, params, seed=args.seed)
    except ClosureError as exc:
        return {"status": "not-closed", "detail": str(exc), "basis": [g.name for g in gens]}, EXIT_FAIL
    res = classify(sc)
    out = {"basis": [g.name for g in gens], **res.to_json(), "structure_constants": sc.to_json()}
    code = EXIT_OK
    if args.expect is not None:
        from .liealg import canonical_label

        out["expected"] = args.expect
        out["match"] = canonical_label(args.expect) in res.candidates
        code = EXIT_OK if out["match"] else EXIT_FAIL
    return out, code


def _classify_row(args) -> tuple[dict, int]:
    from . import corpus

    rows = corpus.load()
    if args.table is None or args.item is None:
        raise UsageError("--table and --item go together")
    try:
        row = corpus.find_row(rows, args.table, args.item)
    except (KeyError, LookupError) as exc:
        raise UsageError(str(exc)) from None
    rep = corpus.run_row(row, corpus.RunConfig(seed=args.seed, samples=args.samples, tol=args.tol))
    algebras = [dict(b.__dict__) for b in rep.branches]
    ok = all(b["status"] in ("match", "tie", "formal") for b in algebras)
    return {"id": row.id, "algebras": algebras, "notes": rep.notes}, EXIT_OK if ok else EXIT_FAIL


def cmd_equiv(args) -> tuple[dict, int]:
    from .equiv import TransformSpec, apply_transform, conjugate_generator, parse_kappa
    from .detsys import VerifyConfig, verify_operator

    pf = _read_potential(args.potential)
    spec = TransformSpec(args.kind, omega=args.omega, kappa=parse_kappa(args.kappa), mu=args.mu, nu=args.nu,
                         matrix=tuple(args.matrix) if args.matrix else (1.0, 0.0, 0.0, 0.0),
                         normalization=args.normalization)
    res = apply_transform(pf.potential, spec, pf.params, seed=args.seed, samples=args.samples, tol=args.tol)
    out = {"input": pf.source, **res.to_json()}
    ok = res.verified
    if args.generator:
        cfg = VerifyConfig(samples=args.samples, seed=args.seed, tol=args.tol, params=pf.params)
        carried = []
        for g in _parse_generators(args.generator, pf):
            q = conjugate_generator(g.op, spec)
            rep = verify_operator(res.potential, q, cfg, structured=False)
            carried.append({"generator": g.name, "pass": rep.passed, "residuals": rep.residuals})
            ok = ok and rep.passed
        out["generators"] = carried
    out["pass"] = ok
    return out, EXIT_OK if ok else EXIT_FAIL


def cmd_corpus(args) -> tuple[dict, int]:
    from . import corpus

    rows = corpus.load()
    if args.action == "list":
        return {"rows": [{"id": r.id, "potential": r.potential, "symmetries": [s.text for s in r.symmetries],
                          "algebras": [b.label for b in r.algebras]} for r in rows]}, EXIT_OK
    cfg = corpus.RunConfig(seed=args.seed, samples=args.samples, tol=args.tol,
                           classify=not args.no_classify, find=args.find)
    summary = corpus.run_all(cfg, rows, table=args.table, item=args.item, jobs=args.jobs)
    if not summary.rows:
        raise UsageError("no corpus rows match the selection")
    out = summary.to_json()
    if not args.timings:
        out = _strip_timings(out)
    bad_alg = [(r.id, b.label, b.condition) for r in summary.rows for b in r.branches
               if b.status in ("mismatch", "not-closed")]
    missing = [r.id for r in summary.rows if r.finder and r.finder["status"] == "missing"]
    out["algebra_failures"] = [{"id": i, "label": l, "condition": c} for i, l, c in bad_alg]
    if args.find:
        out["finder_missing"] = missing
    ok = summary.passed and not bad_alg and not missing
    out["pass"] = ok
    return out, EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "find": cmd_find, "classify": cmd_classify, "equiv": cmd_equiv,
            "corpus": cmd_corpus}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    from .expr import ExprError

    try:
        out, code = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(out, sort_keys=True, default=_json_default)
    print(text)
    if getattr(args, "output", None):
        args.output.write_text(text + "\n")
    return code


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if hasattr(obj, "item"):
        return obj.item()
    return str(obj)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
