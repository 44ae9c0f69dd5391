"""Fixed-point bound propagation along the inequality edges, and diffs of databases."""

from __future__ import annotations

import random
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .graph import InequalityGraph
from .model import (
    PARITY,
    Contradiction,
    Interval,
    KnotDatabase,
    KnotIneqError,
    KnotRecord,
    Parity,
    PropagationEvent,
    Registry,
    Side,
    edge_cause,
    fmt_bound,
    round_down_even,
    round_up_even,
)

# Worklist pops allowed per edge before we call the run non-terminating.
_STEP_FACTOR = 64


class _Plan:
    """Index-based view of a graph over a registry, cheap to pickle."""

    def __init__(self, graph: InequalityGraph, registry: Registry,
                 order: Sequence[int] | None = None):
        graph.check_registry(registry)
        self.ids = registry.ids
        idx = registry.index
        self.even = tuple(v.parity is Parity.EVEN for v in registry)
        self.edges = tuple((e.label, idx[e.greater], idx[e.lesser]) for e in graph.edges)
        self.seed_order = tuple(order) if order is not None else tuple(range(len(self.edges)))
        incident: list[list[int]] = [[] for _ in self.ids]
        for k, (_, g, l) in enumerate(self.edges):
            incident[g].append(k)
            incident[l].append(k)
        self.incident = tuple(tuple(x) for x in incident)


def _run_record(plan: _Plan, knot_id: str, values: dict[str, Interval],
                start_seq: int) -> tuple[dict[str, Interval], list[PropagationEvent]]:
    ids = plan.ids
    lo = [values[v].lo for v in ids]
    hi = [values[v].hi for v in ids]
    events: list[PropagationEvent] = []
    seq = start_seq

    def log(v: int, side: Side, old, new, cause: str, source: tuple[int, Side] | None):
        nonlocal seq
        src = (ids[source[0]], source[1]) if source else None
        events.append(PropagationEvent(knot_id, ids[v], side, old, new, cause, seq, src))
        seq += 1

    def check(v: int) -> None:
        if lo[v] > hi[v]:
            chain = tuple(e for e in events if e.vertex_id == ids[v])
            raise Contradiction(
                f"{knot_id}/{ids[v]}: bounds crossed at [{lo[v]}, {fmt_bound(hi[v])}]",
                left=Interval(0, hi[v]), right=Interval(lo[v]),
                knot_id=knot_id, vertex_id=ids[v], chain=chain)

    def parity(v: int) -> None:
        if not plan.even[v]:
            return
        new_lo = round_up_even(lo[v])
        if new_lo != lo[v]:
            log(v, Side.LOWER, lo[v], new_lo, PARITY, (v, Side.LOWER))
            lo[v] = new_lo
        new_hi = round_down_even(hi[v])
        if new_hi != hi[v]:
            log(v, Side.UPPER, hi[v], new_hi, PARITY, (v, Side.UPPER))
            hi[v] = new_hi
        check(v)

    for v in range(len(ids)):
        parity(v)

    edges = plan.edges
    queue = deque(plan.seed_order)
    queued = set(queue)
    budget = _STEP_FACTOR * len(ids) * max(len(edges), 1)
    while queue:
        budget -= 1
        if budget < 0:
            raise KnotIneqError(f"{knot_id}: propagation failed to terminate")
        k = queue.popleft()
        queued.discard(k)
        label, g, l = edges[k]
        changed = []
        if lo[l] > lo[g]:
            log(g, Side.LOWER, lo[g], lo[l], edge_cause(label), (l, Side.LOWER))
            lo[g] = lo[l]
            check(g)
            parity(g)
            changed.append(g)
        if hi[g] < hi[l]:
            log(l, Side.UPPER, hi[l], hi[g], edge_cause(label), (g, Side.UPPER))
            hi[l] = hi[g]
            check(l)
            parity(l)
            changed.append(l)
        for v in changed:
            for k2 in plan.incident[v]:
                if k2 not in queued:
                    queue.append(k2)
                    queued.add(k2)

    return {v: Interval(lo[i], hi[i]) for i, v in enumerate(ids)}, events


def _run_chunk(plan: _Plan, items: list[tuple[str, dict[str, Interval], int]], strict: bool):
    out = []
    for knot_id, values, start in items:
        try:
            out.append((knot_id, *_run_record(plan, knot_id, values, start), None))
        except Contradiction as exc:
            if strict:
                raise
            out.append((knot_id, values, [], exc))
    return out


def propagate(db: KnotDatabase, g: InequalityGraph, *, strict: bool = False,
              seed: int | None = None, order: Sequence[int] | None = None,
              jobs: int = 1) -> KnotDatabase:
    """Tighten every record until no edge or parity rule changes any bound.

    Returns a new database. Knots whose bounds become contradictory are left
    unchanged and reported in ``contradictions`` unless ``strict`` is set, in
    which case the first `Contradiction` propagates to the caller.

    ``seed`` or ``order`` permute the initial worklist; the result does not
    depend on them, only the event log does.
    """
    if order is None and seed is not None:
        order = list(range(len(g.edges)))
        random.Random(seed).shuffle(order)
    plan = _Plan(g, db.registry, order)

    next_seq: dict[str, int] = {}
    for e in db.provenance:
        next_seq[e.knot_id] = max(next_seq.get(e.knot_id, 0), e.seq + 1)
    items = [(r.knot_id, r.values, next_seq.get(r.knot_id, 0)) for r in db.records]

    if jobs > 1 and len(items) > 1:
        size = -(-len(items) // jobs)
        chunks = [items[i:i + size] for i in range(0, len(items), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = [r for part in pool.map(_run_chunk, [plan] * len(chunks), chunks,
                                              [strict] * len(chunks)) for r in part]
    else:
        results = _run_chunk(plan, items, strict)

    out = KnotDatabase(db.registry, provenance=list(db.provenance),
                       contradictions=list(db.contradictions))
    for knot_id, values, events, exc in results:
        out.add(KnotRecord(knot_id, dict(values)))
        out.provenance.extend(events)
        if exc is not None:
            out.contradictions.append(exc)
    return out


def first_tightening(db: KnotDatabase, g: InequalityGraph) -> tuple[str, str] | None:
    """Return ``(knot, vertex)`` of some bound that propagation would still tighten."""
    plan = _Plan(g, db.registry)
    for rec in db.records:
        v = rec.values
        for i, vid in enumerate(plan.ids):
            if plan.even[i] and (v[vid].lo % 2 or (v[vid].hi != float("inf") and v[vid].hi % 2)):
                return rec.knot_id, vid
        for _, gi, li in plan.edges:
            gv, lv = v[plan.ids[gi]], v[plan.ids[li]]
            if lv.lo > gv.lo:
                return rec.knot_id, plan.ids[gi]
            if gv.hi < lv.hi:
                return rec.knot_id, plan.ids[li]
    return None


def is_fixed_point(db: KnotDatabase, g: InequalityGraph) -> bool:
    return first_tightening(db, g) is None


class Category(Enum):
    NEW_EXACT = "NewExact"
    TIGHTENED_LOWER = "TightenedLower"
    TIGHTENED_UPPER = "TightenedUpper"
    TIGHTENED_BOTH = "TightenedBoth"
    UNCHANGED = "Unchanged"


def categorize(before: Interval, after: Interval) -> Category:
    if before == after:
        return Category.UNCHANGED
    if not before.is_exact and after.is_exact:
        return Category.NEW_EXACT
    if after.lo != before.lo and after.hi != before.hi:
        return Category.TIGHTENED_BOTH
    if after.lo != before.lo:
        return Category.TIGHTENED_LOWER
    return Category.TIGHTENED_UPPER


class MismatchedDatabases(KnotIneqError, ValueError):
    pass


@dataclass(frozen=True, slots=True)
class DiffRow:
    knot_id: str
    vertex_id: str
    before: Interval
    after: Interval
    category: Category


@dataclass
class DiffReport:
    rows: list[DiffRow]
    vertex_order: tuple[str, ...]

    def counts(self) -> Counter:
        """Counts keyed by ``(vertex, category)``."""
        return Counter((r.vertex_id, r.category) for r in self.rows)

    def restricted(self, vertices) -> "DiffReport":
        keep = set(vertices)
        return DiffReport([r for r in self.rows if r.vertex_id in keep], self.vertex_order)

    def count(self, category: Category) -> int:
        return sum(1 for r in self.rows if r.category is category)

    def summary(self) -> str:
        counts = self.counts()
        cats = [c for c in Category if c is not Category.UNCHANGED]
        lines = [f"{len(self.rows)} changed cells"]
        for c in cats:
            lines.append(f"  {c.value}: {self.count(c)}")
        lines.append("by vertex:")
        for v in self.vertex_order:
            parts = [f"{c.value}={counts[(v, c)]}" for c in cats if counts[(v, c)]]
            if parts:
                lines.append(f"  {v}: " + ", ".join(parts))
        return "\n".join(lines) + "\n"


def diff(before: KnotDatabase, after: KnotDatabase) -> DiffReport:
    if before.registry.ids != after.registry.ids:
        raise MismatchedDatabases("databases use different vertex registries")
    if before.knot_ids != after.knot_ids:
        raise MismatchedDatabases("databases hold different knots")
    rows = []
    order = before.registry.ids
    for rb, ra in zip(before.records, after.records):
        for vid in order:
            b, a = rb.values[vid], ra.values[vid]
            if b == a:
                continue
            if a not in b:
                raise MismatchedDatabases(
                    f"{rb.knot_id}/{vid}: [{a}] is not contained in [{b}]")
            rows.append(DiffRow(rb.knot_id, vid, b, a, categorize(b, a)))
    return DiffReport(rows, order)
