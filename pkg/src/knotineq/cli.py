"""Command-line entry point: ``knotineq <subcommand> [options]``.

Pipeline state moves between subcommands as files. A typical run::

    knotineq import knotinfo.csv --supplement refs.csv --out run/
    knotineq propagate --db run/ingested.csv --out run/
    knotineq diff run/ingested.csv run/db.csv --out run/
    knotineq mine --db run/db.csv --out run/
    knotineq check-golden --db run/db.csv u2-list gds4-list gds6-list
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .graph import export_dot, load_graph
from .ingest import (
    ColumnMapping,
    SupplementTable,
    build_database,
    parse_knotinfo_csv,
    read_database,
    save_database,
)
from .mine import (
    ExclusionList,
    NotAFixedPoint,
    basic_conjectures,
    conjecture_report,
    enumerate_conjectures,
)
from .model import KnotIneqError, Registry, UnknownKnot, UnknownVertex, read_parity_table
from .propagate import diff, propagate
from .report import GoldenList, check_golden, diff_csv, explain

DATA_DIR_ENV = "KNOTINEQ_DATA_DIR"


class UsageError(Exception):
    """Bad paths or arguments detected after parsing; exits with status 2."""


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="inequality graph file (default: bundled)")
    p.add_argument("--parity", help="parity table (default: bundled)")
    p.add_argument("--vertices", help="vertex registry table (default: bundled)")


def _existing(path: str | None, what: str) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {path}")
    return p


def _db_path(args, default_name: str) -> Path:
    if args.db:
        return _existing(args.db, "database")
    base = os.environ.get(DATA_DIR_ENV)
    if not base:
        raise UsageError(f"--db is required (or set {DATA_DIR_ENV})")
    return _existing(str(Path(base) / default_name), "database")


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _registry(args) -> Registry:
    return Registry.load(_existing(args.vertices, "vertex table"),
                         _existing(args.parity, "parity table"))


def _graph(args):
    return load_graph(_existing(args.graph, "graph file"))


def _summary(**counts) -> None:
    print("summary: " + " ".join(f"{k}={v}" for k, v in counts.items()))


def cmd_validate(args) -> int:
    registry = _registry(args)
    g = _graph(args)
    g.check_registry(registry)
    mapping = ColumnMapping.load(_existing(args.mapping, "column mapping"), registry)
    parity_file = _existing(args.parity, "parity table")
    if parity_file is None:
        from .model import data_path
        parity_file = data_path("parity.tsv")
    parity = read_parity_table(parity_file.read_text(encoding="utf-8"))
    print(f"{len(registry)} vertices, {len(g.edges)} edges, {len(parity)} parity entries")
    print(f"mapping: {len(mapping.columns)} columns onto KnotInfo-sourced vertices")
    _summary(vertices=len(registry), edges=len(g.edges), parity=len(parity),
             columns=len(mapping.columns))
    return 0


def cmd_import(args) -> int:
    registry = _registry(args)
    mapping = ColumnMapping.load(_existing(args.mapping, "column mapping"), registry)
    src = _existing(args.csv, "KnotInfo export")
    raw = parse_knotinfo_csv(src.read_text(encoding="utf-8"), mapping,
                             delimiter="\t" if args.tsv else ",")
    sups = [SupplementTable.load(_existing(s, "supplement")) for s in args.supplement]
    db = build_database(raw, sups, registry, strict=args.strict)
    for exc in db.contradictions:
        print(f"contradiction: {exc}", file=sys.stderr)
    out = _out_dir(args) / "ingested.csv"
    save_database(db, out)
    print(f"wrote {out}")
    _summary(knots=len(db), events=len(db.provenance), supplements=len(sups),
             contradictions=len(db.contradictions))
    return 0


def cmd_propagate(args) -> int:
    registry = _registry(args)
    g = _graph(args)
    db = read_database(_db_path(args, "ingested.csv"), registry)
    before = len(db.provenance)
    new = propagate(db, g, strict=args.strict, seed=args.seed, jobs=args.jobs)
    for exc in new.contradictions:
        print(f"contradiction: {exc}", file=sys.stderr)
    out = _out_dir(args) / "db.csv"
    save_database(new, out)
    print(f"wrote {out}")
    _summary(knots=len(new), events=len(new.provenance) - before,
             contradictions=len(new.contradictions))
    return 0


def cmd_diff(args) -> int:
    registry = _registry(args)
    before = read_database(_existing(args.before, "database"), registry)
    after = read_database(_existing(args.after, "database"), registry)
    report = diff(before, after)
    if args.only:
        report = report.restricted(v.strip() for v in args.only.split(","))
    sys.stdout.write(report.summary())
    out = _out_dir(args) / "diff.csv"
    out.write_text(diff_csv(report), encoding="utf-8")
    print(f"wrote {out}")
    _summary(knots=len(after), diffs=len(report.rows))
    return 0


def cmd_mine(args) -> int:
    registry = _registry(args)
    g = _graph(args)
    db = read_database(_db_path(args, "db.csv"), registry)
    excl = ExclusionList.load(_existing(args.exclusions, "exclusion list"))
    conj = enumerate_conjectures(db, g, excl, exact_only=args.exact_only)
    basic = basic_conjectures(g, conj)
    for c in basic:
        print(f"basic: {c}")
    out = _out_dir(args) / "conjectures.csv"
    out.write_text(conjecture_report(conj), encoding="utf-8")
    print(f"wrote {out}")
    _summary(knots=len(db), conjectures=len(conj), basic=len(basic))
    return 0


def cmd_explain(args) -> int:
    registry = _registry(args)
    g = _graph(args)
    db = read_database(_db_path(args, "db.csv"), registry)
    text = explain(db, args.knot, args.vertex, g)
    sys.stdout.write(text)
    _summary(knots=len(db), events=max(len(text.splitlines()) - 1, 0))
    return 0


def cmd_check_golden(args) -> int:
    registry = _registry(args)
    db = read_database(_db_path(args, "db.csv"), registry)
    status, passed, total = 0, 0, 0
    for name in args.lists:
        try:
            golden = GoldenList.load(name)
        except FileNotFoundError:
            raise UsageError(f"golden list not found: {name}") from None
        res = check_golden(db, golden)
        sys.stdout.write(res.summary())
        status = max(status, res.exit_code)
        passed += len(res.passed)
        total += len(golden.knot_ids)
    _summary(knots=len(db), passed=passed, listed=total)
    return status


def cmd_export_dot(args) -> int:
    g = _graph(args)
    labels = None
    if args.display:
        labels = {v.id: v.display for v in _registry(args)}
    text = export_dot(g, labels)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"summary: nodes={len(g.vertices)} edges={len(g.edges)}",
          file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_knotinfo(args) -> int:
    try:
        from .knotinfo import knotinfo_csv
        text = knotinfo_csv(args.max_crossings)
    except ImportError:
        print("error: the database_knotinfo package is not installed", file=sys.stderr)
        return 1
    out = Path(args.out or "knotinfo.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    print(f"wrote {out}")
    _summary(knots=text.count("\n") - 1)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knotineq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check graph, parity table and mapping")
    _common(p)
    p.add_argument("--mapping")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("import", help="ingest a KnotInfo CSV plus supplements")
    _common(p)
    p.add_argument("csv")
    p.add_argument("--mapping")
    p.add_argument("--supplement", action="append", default=[])
    p.add_argument("--tsv", action="store_true", help="input is tab separated")
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("propagate", help="tighten bounds to the fixed point")
    _common(p)
    p.add_argument("--db")
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("diff", help="compare two databases cell by cell")
    _common(p)
    p.add_argument("before")
    p.add_argument("after")
    p.add_argument("--only", help="comma-separated vertex ids to keep")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("mine", help="enumerate conjectural inequalities")
    _common(p)
    p.add_argument("--db")
    p.add_argument("--out")
    p.add_argument("--exclusions")
    p.add_argument("--exact-only", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("explain", help="show the events behind one cell")
    _common(p)
    p.add_argument("knot")
    p.add_argument("vertex")
    p.add_argument("--db")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("check-golden", help="compare a database with published lists")
    _common(p)
    p.add_argument("lists", nargs="+", help="bundled list name or file path")
    p.add_argument("--db")
    p.set_defaults(func=cmd_check_golden)

    p = sub.add_parser("export-dot", help="write the graph in Graphviz format")
    _common(p)
    p.add_argument("--out")
    p.add_argument("--display", action="store_true", help="use display names as labels")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("knotinfo", help="export a CSV from the database_knotinfo package")
    p.add_argument("--max-crossings", type=int, default=13)
    p.add_argument("--out")
    p.set_defaults(func=cmd_knotinfo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"knotineq {args.command}: {exc}", file=sys.stderr)
        return 2
    except NotAFixedPoint as exc:
        print(f"error: {exc}; run 'knotineq propagate' first", file=sys.stderr)
        return 1
    except (UnknownKnot, UnknownVertex) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KnotIneqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
