"""Reading KnotInfo-style tables and supplements into a `KnotDatabase`.

Also holds the plain-text formats used to pass databases between CLI runs:
the ``lo:hi`` cell export and the provenance event log.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .model import (
    INF,
    INGEST,
    PARITY,
    UNKNOWN,
    Contradiction,
    DuplicateKnot,
    Interval,
    KnotDatabase,
    KnotIneqError,
    KnotRecord,
    Parity,
    PropagationEvent,
    Registry,
    Side,
    SourceClass,
    _data_lines,
    apply_parity,
    data_path,
    fmt_bound,
    meet,
    parse_bound,
    to_vertex,
)

NAME_KEY = "@name"
SYNTAXES = ("count", "signed")
ABSENT = {"", "unknown", "not known", "?", "n/a"}


class IngestError(KnotIneqError, ValueError):
    pass


class MalformedCell(IngestError):
    def __init__(self, row: int, column: str, text: str, why: str = ""):
        self.row, self.column, self.text = row, column, text
        detail = f" ({why})" if why else ""
        super().__init__(f"row {row}, column {column!r}: cannot read {text!r}{detail}")


class UnknownColumn(IngestError):
    pass


@dataclass
class ColumnMapping:
    name_column: str
    columns: dict[str, tuple[str, str]]

    @classmethod
    def from_text(cls, text: str, registry: Registry | None = None) -> "ColumnMapping":
        name_column = None
        columns: dict[str, tuple[str, str]] = {}
        for lineno, cols in _data_lines(text):
            cols = [c.strip() for c in cols]
            if len(cols) == 2 and cols[1] == NAME_KEY:
                name_column = cols[0]
                continue
            if len(cols) != 3:
                raise IngestError(f"mapping line {lineno}: expected header, vertex, syntax")
            header, vid, syntax = cols
            if syntax not in SYNTAXES:
                raise IngestError(f"mapping line {lineno}: unknown syntax {syntax!r}")
            if header in columns:
                raise IngestError(f"mapping line {lineno}: header {header!r} mapped twice")
            columns[header] = (vid, syntax)
        if name_column is None:
            raise IngestError("mapping has no @name line")
        mapping = cls(name_column, columns)
        if registry is not None:
            mapping.validate(registry)
        return mapping

    @classmethod
    def load(cls, path: str | Path | None = None,
             registry: Registry | None = None) -> "ColumnMapping":
        p = Path(path) if path else data_path("mapping.tsv")
        return cls.from_text(p.read_text(encoding="utf-8"), registry)

    def validate(self, registry: Registry) -> None:
        targets = [vid for vid, _ in self.columns.values()]
        for vid in targets:
            if vid not in registry:
                raise IngestError(f"mapping targets unknown vertex {vid!r}")
        dupes = {v for v in targets if targets.count(v) > 1}
        if dupes:
            raise IngestError(f"vertices mapped more than once: {sorted(dupes)}")
        expected = set(registry.by_source(SourceClass.KNOTINFO))
        if expected and set(targets) != expected:
            missing = sorted(expected - set(targets))
            extra = sorted(set(targets) - expected)
            raise IngestError(f"mapping must cover the KnotInfo-sourced vertices exactly; "
                              f"missing {missing}, not KnotInfo-sourced {extra}")


_SUBSCRIPT = re.compile(r"^(\d+)([an])_?\{?(\d+)\}?$")
_ROLFSEN = re.compile(r"^(\d+)_\{?(\d+)\}?$")


def normalize_knot_name(name: str) -> str:
    """Canonical knot name: ``13n_{128}`` and ``13n_128`` become ``13n128``.

    Rolfsen-style names keep their underscore (``3_1``).
    """
    n = name.strip().strip("$").replace(" ", "")
    m = _SUBSCRIPT.match(n)
    if m:
        return f"{m.group(1)}{m.group(2)}{m.group(3)}"
    m = _ROLFSEN.match(n)
    if m:
        return f"{m.group(1)}_{m.group(2)}"
    return n


_INT = r"[-+]?\d+"
_BOUND = r"[-+]?\d+|inf|infty|∞"
_BRACKET = re.compile(rf"^\[\s*({_INT})\s*,\s*({_BOUND})\s*[\])]$", re.I)
_DOTS = re.compile(rf"^({_INT})\s*\.\.\s*({_BOUND})?$", re.I)


def parse_cell(text: str, syntax: str) -> tuple[int, int | float] | None:
    """Parse one cell into a raw ``(lo, hi)`` range, or None when absent."""
    t = text.strip()
    if t.lower() in ABSENT:
        return None
    if re.fullmatch(_INT, t):
        lo = hi = int(t)
    else:
        m = _BRACKET.match(t) or _DOTS.match(t)
        if not m:
            raise ValueError("unrecognised cell syntax")
        lo = int(m.group(1))
        hi = parse_bound(m.group(2)) if m.group(2) else INF
    if lo > hi:
        raise ValueError("empty range")
    if syntax == "count" and lo < 0:
        raise ValueError("negative value in an unsigned column")
    return lo, hi


@dataclass
class RawTable:
    """Ingested cells in natural invariant units, keyed by knot then vertex."""

    knots: list[str] = field(default_factory=list)
    cells: dict[str, dict[str, tuple[int, int | float]]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.knots)


def parse_knotinfo_csv(document: str, mapping: ColumnMapping,
                       delimiter: str = ",") -> RawTable:
    reader = csv.reader(io.StringIO(document), delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise IngestError("empty document") from None
    pos = {h: i for i, h in enumerate(header)}
    missing = [h for h in [mapping.name_column, *mapping.columns] if h not in pos]
    if missing:
        raise UnknownColumn(f"columns missing from header: {missing}")
    table = RawTable()
    for rowno, row in enumerate(reader, 2):
        if not any(c.strip() for c in row):
            continue
        if len(row) < len(header):
            row = row + [""] * (len(header) - len(row))
        knot = normalize_knot_name(row[pos[mapping.name_column]])
        if not knot:
            raise MalformedCell(rowno, mapping.name_column, "", "empty knot name")
        if knot in table.cells:
            raise DuplicateKnot(knot)
        cells = {}
        for h, (vid, syntax) in mapping.columns.items():
            text = row[pos[h]]
            try:
                parsed = parse_cell(text, syntax)
            except ValueError as exc:
                raise MalformedCell(rowno, h, text, str(exc)) from None
            if parsed is not None:
                cells[vid] = parsed
        table.knots.append(knot)
        table.cells[knot] = cells
    return table


@dataclass(frozen=True, slots=True)
class SupplementRow:
    knot_id: str
    vertex_id: str
    interval: Interval
    override: bool = False


@dataclass
class SupplementTable:
    """Extra vertex-unit bounds for vertices KnotInfo does not carry."""

    rows: list[SupplementRow]
    name: str = "supplement"

    @classmethod
    def from_text(cls, text: str, name: str = "supplement") -> "SupplementTable":
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        reader = csv.DictReader(lines)
        need = {"knot", "vertex", "lo", "hi"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise IngestError(f"{name}: supplement needs columns knot,vertex,lo,hi")
        rows = []
        for rowno, row in enumerate(reader, 2):
            try:
                iv = Interval(int(row["lo"]), parse_bound(row["hi"]))
            except (ValueError, Contradiction) as exc:
                raise MalformedCell(rowno, "lo/hi", f"{row['lo']},{row['hi']}", str(exc)) from None
            flag = (row.get("override") or "").strip().lower() in ("1", "true", "yes")
            rows.append(SupplementRow(normalize_knot_name(row["knot"]), row["vertex"].strip(),
                                      iv, flag))
        return cls(rows, name)

    @classmethod
    def load(cls, path: str | Path) -> "SupplementTable":
        p = Path(path)
        return cls.from_text(p.read_text(encoding="utf-8"), p.name)

    def validate(self, registry: Registry) -> None:
        allowed = {SourceClass.REFERENCE, SourceClass.UNKNOWN}
        for r in self.rows:
            vdef = registry[r.vertex_id]
            if vdef.source_class not in allowed and not r.override:
                raise IngestError(
                    f"{self.name}: {r.knot_id}/{r.vertex_id} is KnotInfo-sourced; "
                    "set override=1 to supersede it deliberately")


class _Builder:
    def __init__(self, knot_id: str, registry: Registry, strict: bool = True):
        self.knot_id = knot_id
        self.registry = registry
        self.strict = strict
        self.values = {v: UNKNOWN for v in registry.ids}
        self.events: list[PropagationEvent] = []
        self.errors: list[Contradiction] = []

    def _fail(self, exc: Contradiction) -> None:
        if self.strict:
            raise exc
        self.errors.append(exc)

    def narrow(self, vid: str, iv: Interval, cause: str) -> None:
        old = self.values[vid]
        try:
            new = meet(old, iv)
        except Contradiction as exc:
            self._fail(exc.located(self.knot_id, vid, tuple(
                e for e in self.events if e.vertex_id == vid)))
            return
        self._log(vid, old, new, cause)

    def _log(self, vid: str, old: Interval, new: Interval, cause: str) -> None:
        for side, before, after in ((Side.LOWER, old.lo, new.lo), (Side.UPPER, old.hi, new.hi)):
            if after != before:
                src = (vid, side) if cause == PARITY else None
                self.events.append(PropagationEvent(self.knot_id, vid, side, before, after,
                                                    cause, len(self.events), src))
        self.values[vid] = new

    def parity_pass(self) -> None:
        for vdef in self.registry:
            if vdef.parity is Parity.ANY:
                continue
            old = self.values[vdef.id]
            try:
                new = apply_parity(old, vdef.parity)
            except Contradiction as exc:
                self._fail(exc.located(self.knot_id, vdef.id, tuple(
                    e for e in self.events if e.vertex_id == vdef.id)))
                continue
            self._log(vdef.id, old, new, PARITY)


def build_database(raw: RawTable, supplements: Iterable[SupplementTable],
                   registry: Registry, *, strict: bool = False) -> KnotDatabase:
    """Turn raw cells into vertex intervals, add supplements, round for parity.

    Supplement rows for knots absent from ``raw`` are ignored, so one
    supplement file can serve tables of different crossing ranges.

    A value that contradicts what is already known for its cell is skipped
    and recorded in ``contradictions``; with ``strict`` it raises instead.
    """
    supplements = list(supplements)
    for s in supplements:
        s.validate(registry)
    by_knot: dict[str, list[SupplementRow]] = {}
    for s in supplements:
        for r in s.rows:
            by_knot.setdefault(r.knot_id, []).append(r)

    db = KnotDatabase(registry)
    for knot in raw.knots:
        b = _Builder(knot, registry, strict)
        for vid, (lo, hi) in raw.cells[knot].items():
            try:
                iv = to_vertex(lo, hi, registry[vid].transform)
            except Contradiction as exc:
                b._fail(exc.located(knot, vid))
                continue
            b.narrow(vid, iv, INGEST)
        for r in by_knot.get(knot, ()):
            b.narrow(r.vertex_id, r.interval, INGEST)
        b.parity_pass()
        db.add(KnotRecord(knot, b.values))
        db.provenance.extend(b.events)
        db.contradictions.extend(b.errors)
    return db


def export_database(db: KnotDatabase) -> str:
    """CSV with one ``lo:hi`` column per vertex, e.g. ``4:4`` or ``0:inf``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    ids = db.registry.ids
    w.writerow(["knot", *ids])
    for rec in db.records:
        w.writerow([rec.knot_id, *(str(rec.values[v]) for v in ids)])
    return buf.getvalue()


def load_database(text: str, registry: Registry) -> KnotDatabase:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty database file") from None
    if header[:1] != ["knot"] or set(header[1:]) != set(registry.ids) or len(header) != len(registry) + 1:
        raise IngestError("database header does not match the vertex registry")
    db = KnotDatabase(registry)
    for rowno, row in enumerate(reader, 2):
        if not row:
            continue
        values = {}
        for vid, cell in zip(header[1:], row[1:]):
            try:
                values[vid] = Interval.parse(cell)
            except (ValueError, Contradiction) as exc:
                raise MalformedCell(rowno, vid, cell, str(exc)) from None
        db.add(KnotRecord(row[0], values))
    return db


EVENT_FIELDS = ["seq", "knot", "vertex", "side", "old", "new", "cause",
                "source_vertex", "source_side"]


def export_events(events: Iterable[PropagationEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_FIELDS)
    for e in events:
        src_v, src_s = (e.source[0], e.source[1].value) if e.source else ("", "")
        w.writerow([e.seq, e.knot_id, e.vertex_id, e.side.value, fmt_bound(e.old),
                    fmt_bound(e.new), e.cause, src_v, src_s])
    return buf.getvalue()


def load_events(text: str) -> list[PropagationEvent]:
    events = []
    for row in csv.DictReader(io.StringIO(text)):
        src = (row["source_vertex"], Side(row["source_side"])) if row["source_vertex"] else None
        events.append(PropagationEvent(row["knot"], row["vertex"], Side(row["side"]),
                                       parse_bound(row["old"]), parse_bound(row["new"]),
                                       row["cause"], int(row["seq"]), src))
    return events


def events_path_for(db_path: str | Path) -> Path:
    p = Path(db_path)
    return p.with_name("events.csv") if p.name == "db.csv" else p.with_suffix(".events.csv")


def save_database(db: KnotDatabase, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(export_database(db), encoding="utf-8")
    events_path_for(p).write_text(export_events(db.provenance), encoding="utf-8")


def read_database(path: str | Path, registry: Registry) -> KnotDatabase:
    p = Path(path)
    db = load_database(p.read_text(encoding="utf-8"), registry)
    ev = events_path_for(p)
    if ev.exists():
        db.provenance = load_events(ev.read_text(encoding="utf-8"))
    return db
