"""Explanations of derived bounds and checks against published knot lists."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .graph import InequalityGraph
from .ingest import normalize_knot_name
from .model import (
    INGEST,
    Interval,
    KnotDatabase,
    PropagationEvent,
    Side,
    UnknownVertex,
    cause_label,
    data_path,
    fmt_bound,
)
from .propagate import DiffReport

MAX_DEPTH = 20
GOLDEN_LISTS = ("u2-list", "gds4-list", "gds6-list")


def causal_chain(db: KnotDatabase, knot_id: str, vertex_id: str,
                 max_depth: int = MAX_DEPTH) -> tuple[list[PropagationEvent], bool]:
    """Events behind the current bounds of one cell, oldest first.

    Returns the events and whether the walk was cut at ``max_depth``.
    Ingested values end the walk and are not part of the chain.
    """
    rec = db[knot_id]
    if vertex_id not in rec.values:
        raise UnknownVertex(vertex_id)
    events = db.events_for(knot_id)
    latest: dict[tuple[str, Side], list[PropagationEvent]] = {}
    for e in events:
        latest.setdefault((e.vertex_id, e.side), []).append(e)

    def producer(bound: tuple[str, Side], before_seq: int) -> PropagationEvent | None:
        found = None
        for e in latest.get(bound, ()):
            if e.seq < before_seq:
                found = e
        return found

    chosen: dict[int, PropagationEvent] = {}
    truncated = False
    frontier = [(producer((vertex_id, s), 1 << 62), 0) for s in Side]
    while frontier:
        ev, depth = frontier.pop()
        if ev is None or ev.seq in chosen or ev.cause == INGEST:
            continue
        if depth >= max_depth:
            truncated = True
            continue
        chosen[ev.seq] = ev
        if ev.source is not None:
            frontier.append((producer(ev.source, ev.seq), depth + 1))
        if ev.source != (ev.vertex_id, ev.side):
            frontier.append((producer((ev.vertex_id, ev.side), ev.seq), depth + 1))
    return [chosen[k] for k in sorted(chosen)], truncated


def describe(e: PropagationEvent, g: InequalityGraph | None = None) -> str:
    verb = "raised lo" if e.side is Side.LOWER else "lowered hi"
    label = cause_label(e.cause)
    if label is not None:
        cite = ""
        if g is not None and label in g.by_label and g.by_label[label].citation:
            cite = f" [{g.by_label[label].citation}]"
        who = f"edge {label}{cite}"
    else:
        who = e.cause
    src = f" from {e.source[0]} {e.source[1].value}" if e.source and label is not None else ""
    return f"{who} {verb} of {e.vertex_id} {fmt_bound(e.old)} -> {fmt_bound(e.new)}{src}"


def explain(db: KnotDatabase, knot_id: str, vertex_id: str,
            g: InequalityGraph | None = None) -> str:
    knot_id = normalize_knot_name(knot_id)
    chain, truncated = causal_chain(db, knot_id, vertex_id)
    iv = db[knot_id].values[vertex_id]
    head = f"{knot_id} {vertex_id} = [{iv.lo}, {fmt_bound(iv.hi)}]"
    if not chain:
        return f"{head}\n  ingest bounds only\n"
    lines = [head] + [f"  {i}. {describe(e, g)}" for i, e in enumerate(chain, 1)]
    if truncated:
        lines.append(f"  ... (chain cut at depth {MAX_DEPTH})")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GoldenList:
    name: str
    vertex_id: str
    target: int
    knot_ids: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str, name: str | None = None) -> "GoldenList":
        meta: dict[str, str] = {}
        knots: list[str] = []
        for line in text.splitlines():
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                key, sep, value = s[1:].partition(":")
                if sep:
                    meta[key.strip()] = value.strip()
                continue
            knots.append(normalize_knot_name(s))
        try:
            return cls(meta.get("name", name or "golden"), meta["vertex"],
                       int(meta["target"]), tuple(knots))
        except KeyError as exc:
            raise ValueError(f"golden list lacks a '# {exc.args[0]}:' header") from None

    @classmethod
    def load(cls, name_or_path: str) -> "GoldenList":
        """Load a bundled list by name (e.g. ``u2-list``) or any list file."""
        p = Path(name_or_path)
        if not p.exists() and name_or_path in GOLDEN_LISTS:
            p = data_path(f"golden/{name_or_path}.txt")
        return cls.from_text(p.read_text(encoding="utf-8"), p.stem)


@dataclass(frozen=True)
class GoldenMiss:
    knot_id: str
    kind: str  # "knot absent", "not exact at target" or "target excluded"
    interval: Interval | None


@dataclass
class GoldenResult:
    golden: GoldenList
    passed: list[str]
    misses: list[GoldenMiss]

    @property
    def ok(self) -> bool:
        return not self.misses

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def summary(self) -> str:
        g = self.golden
        lines = [f"{g.name}: {len(self.passed)}/{len(g.knot_ids)} knots have "
                 f"{g.vertex_id} = {g.target}"]
        for m in self.misses:
            where = f" [{m.interval}]" if m.interval is not None else ""
            lines.append(f"  FAIL {m.knot_id}: {m.kind}{where}")
        return "\n".join(lines) + "\n"


def check_golden(db: KnotDatabase, golden: GoldenList) -> GoldenResult:
    passed, misses = [], []
    for k in golden.knot_ids:
        if k not in db:
            misses.append(GoldenMiss(k, "knot absent", None))
            continue
        iv = db[k].values[golden.vertex_id]
        if iv.lo == iv.hi == golden.target:
            passed.append(k)
        else:
            kind = "target excluded" if golden.target not in iv else "not exact at target"
            misses.append(GoldenMiss(k, kind, iv))
    return GoldenResult(golden, passed, misses)


DIFF_FIELDS = ["knot", "vertex", "before_lo", "before_hi", "after_lo", "after_hi", "category"]


def diff_csv(report: DiffReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIFF_FIELDS)
    for r in report.rows:
        w.writerow([r.knot_id, r.vertex_id, r.before.lo, fmt_bound(r.before.hi),
                    r.after.lo, fmt_bound(r.after.hi), r.category.value])
    return buf.getvalue()
