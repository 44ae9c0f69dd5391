"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``. The full-scale criteria (6 and
8) use the KnotInfo table from the ``database_knotinfo`` package, or the CSV
named by ``KNOTINEQ_KNOTINFO_CSV``. Reference-class supplements can be passed
through ``KNOTINEQ_SUPPLEMENTS`` (paths separated by ``os.pathsep``).
"""

from __future__ import annotations

import itertools
import os
import random
import re
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import FIXTURE_DIFF
from knotineq.graph import Edge, InequalityGraph, closure_of, export_dot, load_graph
from knotineq.ingest import (
    SupplementTable,
    build_database,
    export_database,
    parse_knotinfo_csv,
)
from knotineq.mine import (
    Conjecture,
    ExclusionList,
    basic_conjectures,
    enumerate_conjectures,
    scan_pairs,
)
from knotineq.model import (
    INF,
    PARITY,
    Interval,
    KnotDatabase,
    KnotRecord,
    Parity,
    Registry,
)
from knotineq.propagate import Category, diff, propagate
from knotineq.report import GoldenList, check_golden, diff_csv

# Reference list of the figure: arrow label -> citation key.
CITATIONS = {
    1: "Cro89", 14: "Cro95", 2: "Ada13", 9: "Ada13", 3: "Jab20", 5: "KobKob96", 6: "Mor87",
    7: "Mor86", 8: "Gil82", 26: "Han14", 13: "KauTay76", 15: "HNT90", 20: "Mcd19",
    21: "LivMei15", 27: "SchTho89", 36: "Jab23", 38: "LHLO14", 37: "MorBel98",
    45: "BaePark00", 23: "FW85/Mor86", 22: "Yam87", 40: "definitions", 41: "Ras10",
    42: "OzsSza03", 34: "Fel16",
    **dict.fromkeys((4, 11, 12, 19, 25, 29, 30, 35), "Shi74"),
    **dict.fromkeys((16, 17, 18, 44), "JMZ20"),
    **dict.fromkeys((31, 46), "OweStr16"),
    **dict.fromkeys((10, 28), "Hetal11"),
    **dict.fromkeys((24, 32, 33), "Oza10"),
    **dict.fromkeys((39, 43), "Jab26"),
}

# The ten basic conjectures as (greater, lesser).
BASIC_TEN = {
    ("spFa", "2br-2"), ("tr", "2br-2"), ("2cD", "2br-2"), ("td", "2gf"), ("2us", "2gr"),
    ("2cD", "2cl4"), ("spFa", "spPa"), ("td", "ceil-spV/2"), ("degPz", "2abs-tau"),
    ("degPz", "abs-s"),
}


@pytest.fixture
def verdict(capsys):
    def _verdict(criterion: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return _verdict


# -- 1 -------------------------------------------------------------------------

def test_criterion_1_graph_integrity(verdict):
    start = time.perf_counter()
    g = load_graph()
    labels = {e.label: e.citation for e in g.edges}
    dot = export_dot(g)
    elapsed = time.perf_counter() - start
    nodes = len(re.findall(r'^  "[^"]+" \[label=', dot, re.M))
    arrows = len(re.findall(r'^  "[^"]+" -> "[^"]+"', dot, re.M))
    acyclic = not any((v, v) in closure_of(g.pairs) for v in g.vertices)
    ok = (len(g.vertices) == 33 and len(g.edges) == 46 and acyclic
          and labels == CITATIONS and nodes == 33 and arrows == 46 and elapsed < 1.0)
    bad = sorted(k for k in CITATIONS if labels.get(k) != CITATIONS[k])
    verdict("1", ok, f"{len(g.vertices)} vertices, {len(g.edges)} edges, acyclic={acyclic}, "
                     f"citation mismatches={bad}, dot nodes={nodes} arrows={arrows}, "
                     f"{elapsed:.3f}s")


# -- 2 -------------------------------------------------------------------------

def _milp_hull(values, ids, even, edges):
    """Least and greatest consistent assignment via integer programming.

    Feasible points are closed under componentwise min and max, so minimising
    (maximising) the coordinate sum yields the hull's lower (upper) corner.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    idx = {v: i for i, v in enumerate(ids)}
    s = np.array([2 if v in even else 1 for v in ids], dtype=float)
    lb = np.array([-(-values[v].lo // int(s[i])) for i, v in enumerate(ids)], dtype=float)
    ub = np.array([values[v].hi // int(s[i]) for i, v in enumerate(ids)], dtype=float)
    if np.any(lb > ub):
        return None
    A = np.zeros((len(edges), len(ids)))
    for k, (gv, lv) in enumerate(edges):
        A[k, idx[gv]] += s[idx[gv]]
        A[k, idx[lv]] -= s[idx[lv]]
    cons = [LinearConstraint(A, 0, np.inf)] if edges else []
    corners = []
    for sign in (1, -1):
        res = milp(sign * s, integrality=np.ones(len(ids)), bounds=Bounds(lb, ub),
                   constraints=cons)
        if res.status == 2:
            return None
        assert res.status == 0, res.message
        corners.append(np.rint(res.x) * s)
    lo, hi = corners
    return {v: Interval(int(lo[i]), int(hi[i])) for i, v in enumerate(ids)}


def _enumerated_hull(values, ids, even, edges):
    idx = {v: i for i, v in enumerate(ids)}
    ranges = [[x for x in range(values[v].lo, int(values[v].hi) + 1)
               if v not in even or x % 2 == 0] for v in ids]
    lo = [None] * len(ids)
    hi = [None] * len(ids)
    for point in itertools.product(*ranges):
        if all(point[idx[a]] >= point[idx[b]] for a, b in edges):
            for i, x in enumerate(point):
                lo[i] = x if lo[i] is None else min(lo[i], x)
                hi[i] = x if hi[i] is None else max(hi[i], x)
    if lo[0] is None:
        return None
    return {v: Interval(lo[i], hi[i]) for i, v in enumerate(ids)}


def _box_consistent(box, even, edges):
    for v, iv in box.items():
        if v in even and (iv.lo % 2 or iv.hi % 2):
            return False
    return all(box[a].lo >= box[b].lo and box[a].hi >= box[b].hi for a, b in edges)


def _random_consistent(rng, order, lessers, even, top=40):
    x = {}
    for v in order:
        base = max((x[l] for l in lessers[v]), default=0)
        x[v] = base + (0 if rng.random() < 0.5 else rng.randint(1, 4))
        if v in even and x[v] % 2:
            x[v] += 1
    return x


def _order(g):
    """Vertices with every lesser before its greater."""
    lessers = {v: [e.lesser for e in g.edges if e.greater == v] for v in g.vertices}
    done, out = set(), []
    while len(out) < len(g.vertices):
        for v in g.vertices:
            if v not in done and all(l in done for l in lessers[v]):
                done.add(v)
                out.append(v)
    return out, lessers


def _random_box(rng, ids, x):
    """Finite box of width <= 50; around x when given, possibly nudged off it."""
    box = {}
    for v in ids:
        if x is None:
            lo = rng.randint(0, 40)
            box[v] = Interval(lo, lo + rng.randint(0, 50))
        else:
            lo = max(0, x[v] - rng.randint(0, 25))
            box[v] = Interval(lo, x[v] + rng.randint(0, 25))
    if x is not None and rng.random() < 0.3:
        v = rng.choice(ids)
        lo = rng.randint(0, 60)
        box[v] = Interval(lo, lo + rng.randint(0, 6))
    return box


def test_criterion_2_oracle_equivalence(registry, graph, verdict):
    pytest.importorskip("scipy")
    start = time.perf_counter()
    rng = random.Random(20240602)
    ids = registry.ids
    even = {v.id for v in registry if v.parity is Parity.EVEN}
    edges = [e.pair for e in graph.edges]
    order, lessers = _order(graph)
    fixtures = knots = not_superset = not_equal = missed_empty = false_empty = 0
    empty = 0
    for f in range(200):
        n = rng.randint(5, 20)
        db = KnotDatabase(registry)
        for k in range(n):
            kind = rng.random()
            x = None if kind < 0.2 else _random_consistent(rng, order, lessers, even)
            db.add(KnotRecord(f"f{f}k{k}", _random_box(rng, ids, x)))
        out = propagate(db, graph)
        bad = {c.knot_id for c in out.contradictions}
        for rec in db.records:
            hull = _milp_hull(rec.values, ids, even, edges)
            knots += 1
            if hull is None:
                empty += 1
                missed_empty += rec.knot_id not in bad
                continue
            if rec.knot_id in bad:
                false_empty += 1
                continue
            got = out[rec.knot_id].values
            if not all(hull[v] in got[v] for v in ids):
                not_superset += 1
            elif _box_consistent(hull, even, edges) and got != hull:
                not_equal += 1
        fixtures += 1

    # exhaustive enumeration on small induced subgraphs of the bundled graph
    small = small_bad = 0
    for trial in range(150):
        seed = rng.choice(graph.edges)
        sub = {seed.greater, seed.lesser}
        while len(sub) < rng.randint(3, 6):
            e = rng.choice([e for e in graph.edges if (e.greater in sub) != (e.lesser in sub)])
            sub |= {e.greater, e.lesser}
        sub_ids = [v for v in ids if v in sub]
        sub_edges = [e for e in graph.edges if e.greater in sub and e.lesser in sub]
        sg = InequalityGraph(sub_ids, [Edge(i, e.greater, e.lesser)
                                       for i, e in enumerate(sub_edges, 1)])
        sreg = Registry(registry[v] for v in sub_ids)
        values = {}
        for v in sub_ids:
            lo = rng.randint(0, 8)
            values[v] = Interval(lo, lo + rng.randint(0, 4))
        db = KnotDatabase(sreg, [KnotRecord("k", values)])
        out = propagate(db, sg)
        hull = _enumerated_hull(values, sub_ids, even & sub, [e.pair for e in sub_edges])
        small += 1
        if hull is None:
            small_bad += not out.contradictions
        elif out.contradictions or out["k"].values != hull:
            small_bad += 1
    elapsed = time.perf_counter() - start
    ok = (fixtures >= 200 and not (not_superset or not_equal or missed_empty or false_empty
                                   or small_bad) and elapsed < 60)
    verdict("2", ok, f"{fixtures} fixtures / {knots} knots ({empty} with empty hull): "
                     f"not-superset={not_superset}, unequal={not_equal}, "
                     f"missed-empty={missed_empty}, false-empty={false_empty}; "
                     f"{small} enumerated subgraphs, mismatches={small_bad}; {elapsed:.1f}s")


# -- 3 -------------------------------------------------------------------------

def test_criterion_3_confluence_idempotence(fixture_db, graph, verdict):
    start = time.perf_counter()
    reference = export_database(propagate(fixture_db, graph))
    differing = 0
    for i in range(100):
        order = list(range(len(graph.edges)))
        random.Random(i).shuffle(order)
        if export_database(propagate(fixture_db, graph, order=order)) != reference:
            differing += 1
    once = propagate(fixture_db, graph)
    twice = propagate(once, graph)
    extra = len(twice.provenance) - len(once.provenance)
    elapsed = time.perf_counter() - start
    ok = differing == 0 and extra == 0 and elapsed < 30
    verdict("3", ok, f"100 permutations, {differing} differing databases; "
                     f"second pass events={extra}; {elapsed:.1f}s")


# -- 4 -------------------------------------------------------------------------

def test_criterion_4_soundness(registry, graph, verdict):
    start = time.perf_counter()
    rng = random.Random(7)
    even = {v.id for v in registry if v.parity is Parity.EVEN}
    order, lessers = _order(graph)
    db = KnotDatabase(registry)
    truth = {}
    for k in range(1000):
        x = _random_consistent(rng, order, lessers, even)
        assert all(x[a] >= x[b] for a, b in graph.pairs)
        box = {}
        for v in registry.ids:
            lo = x[v] - rng.randint(0, x[v]) if rng.random() < 0.7 else 0
            hi = INF if rng.random() < 0.4 else x[v] + rng.randint(0, 10)
            box[v] = Interval(lo, hi)
        truth[f"a{k}"] = x
        db.add(KnotRecord(f"a{k}", box))
    out = propagate(db, graph)
    excluded = sum(1 for k, x in truth.items()
                   if any(x[v] not in out[k].values[v] for v in registry.ids))
    elapsed = time.perf_counter() - start
    ok = excluded == 0 and not out.contradictions and elapsed < 60
    verdict("4", ok, f"1000 assignments, {excluded} excluded, "
                     f"{len(out.contradictions)} contradictions; {elapsed:.1f}s")


# -- 5 -------------------------------------------------------------------------

def test_criterion_5_fixture_golden(registry, mapping, graph, verdict):
    from conftest import FIXTURE_CSV, FIXTURE_SUPPLEMENT

    start = time.perf_counter()
    raw = parse_knotinfo_csv(FIXTURE_CSV.read_text(encoding="utf-8"), mapping)
    db = build_database(raw, [SupplementTable.load(FIXTURE_SUPPLEMENT)], registry)
    new = propagate(db, graph)
    tr = new["3_1"].values["tr"]
    causes = [e.cause for e in new.events_for("3_1") if e.vertex_id == "tr"]
    same = diff_csv(diff(db, new)) == FIXTURE_DIFF.read_text(encoding="utf-8")
    elapsed = time.perf_counter() - start
    ok = (tr == Interval(2, 2) and causes == ["edge:10", "edge:26", PARITY] and same
          and elapsed < 5)
    verdict("5", ok, f"trefoil tr=[{tr.lo},{tr.hi}] via {causes}; "
                     f"diff matches golden={same}; {elapsed:.2f}s")


# -- 6 and 8: full scale -------------------------------------------------------

def _knotinfo_text() -> str:
    csv_path = os.environ.get("KNOTINEQ_KNOTINFO_CSV")
    if csv_path:
        return Path(csv_path).read_text(encoding="utf-8")
    pytest.importorskip("database_knotinfo")
    from knotineq.knotinfo import knotinfo_csv

    return knotinfo_csv(13)


@pytest.fixture(scope="module")
def full_scale(registry, mapping, graph):
    """Full table through 13 crossings plus any user supplements, before and after."""
    text = _knotinfo_text()
    sups = [SupplementTable.load(p)
            for p in os.environ.get("KNOTINEQ_SUPPLEMENTS", "").split(os.pathsep) if p]
    before = build_database(parse_knotinfo_csv(text, mapping), sups, registry)
    return before, propagate(before, graph), len(sups)


def _golden_counts(db):
    out = {}
    for name in ("u2-list", "gds4-list", "gds6-list"):
        res = check_golden(db, GoldenList.load(name))
        out[name] = (res, len(res.passed), len(res.golden.knot_ids))
    return out


def test_criterion_6_knotinfo_only_clause(registry, mapping, graph, verdict):
    """Without supplements: no contradictions and every listed target still possible."""
    text = _knotinfo_text()
    before = build_database(parse_knotinfo_csv(text, mapping), [], registry)
    new = propagate(before, graph)
    counts = _golden_counts(new)
    outside = [m.knot_id for res, _, _ in counts.values() for m in res.misses
               if m.interval is None or res.golden.target not in m.interval]
    contradictions = len(before.contradictions) + len(new.contradictions)
    ok = contradictions == 0 and not outside
    passes = ", ".join(f"{n} {p}/{t}" for n, (_, p, t) in counts.items())
    verdict("6 (KnotInfo only)", ok,
            f"{len(new)} knots, contradictions={contradictions}, "
            f"targets outside interval={outside}; exact: {passes}")


def test_criterion_6_full_scale(full_scale, verdict):
    before, new, nsup = full_scale
    counts = _golden_counts(new)
    report = diff(before, new).restricted({"2u", "gds"})
    new_exact = report.count(Category.NEW_EXACT)
    total = len(report.rows)
    ok = (all(p == t for _, p, t in counts.values()) and new_exact == 139 and total >= 232)
    passes = ", ".join(f"{n} {p}/{t}" for n, (_, p, t) in counts.items())
    verdict("6 (full scale)", ok,
            f"{len(new)} knots, {nsup} supplement files; {passes}; "
            f"diff on {{2u, gds}}: NewExact={new_exact} (want 139), "
            f"updates={total} (want >= 232)")


def test_criterion_8_basic_conjectures(full_scale, graph, verdict):
    _, new, nsup = full_scale
    conj = enumerate_conjectures(new, graph, ExclusionList.load())
    basic = {c.pair for c in basic_conjectures(graph, conj)}
    missing = sorted(BASIC_TEN - basic)
    extra = sorted(basic - BASIC_TEN)
    verdict("8 (BasicConj)", basic == BASIC_TEN,
            f"{nsup} supplement files; |Conj|={len(conj)}, |BasicConj|={len(basic)}; "
            f"missing={missing}; unexpected={extra}")


def test_criterion_8_exclusions(full_scale, graph, verdict):
    _, new, _ = full_scale
    excl = ExclusionList.load()
    conj = {c.pair for c in enumerate_conjectures(new, graph, excl)}
    raw = {c.pair for c in scan_pairs(new, graph) if c.status.value == "Conj"}
    leaked = sorted(p for p in conj if p in excl)
    filtered = sorted(p for p in raw if p in excl)
    verdict("8 (exclusions)", not leaked,
            f"exclusion pairs in Conj: {leaked}; "
            f"pairs that would otherwise have entered Conj: {filtered}")


# -- 7 -------------------------------------------------------------------------

def _naive_conj(ids, rows, edges, excl):
    closure = closure_of(edges)
    found = set()
    for i, X in enumerate(ids):
        for j, Y in enumerate(ids):
            if i == j or (X, Y) in closure or frozenset((X, Y)) in excl:
                continue
            if not all(r[i] >= r[j] for r in rows):
                continue
            if any(r[i] == r[j] for r in rows) and any(r[i] > r[j] for r in rows):
                found.add((X, Y))
    return found


def _minimal_generating(base, conj):
    conj = sorted(conj)
    target = set(conj)
    for size in range(len(conj) + 1):
        hits = [set(s) for s in itertools.combinations(conj, size)
                if target <= closure_of(set(base) | set(s)) | set(s)]
        if hits:
            return hits
    return []


def test_criterion_7_miner_oracle(verdict):
    start = time.perf_counter()
    rng = random.Random(11)
    scan_mismatch = 0
    for trial in range(400):
        n = rng.randint(2, 6)
        ids = [f"x{i}" for i in range(n)]
        rows = [[rng.randint(0, 4) for _ in ids] for _ in range(rng.randint(1, 20))]
        pairs = [(a, b) for a in ids for b in ids if a < b]
        edges = [p for p in rng.sample(pairs, rng.randint(0, min(3, len(pairs))))
                 if all(r[ids.index(p[0])] >= r[ids.index(p[1])] for r in rows)]
        excl = {frozenset(p) for p in rng.sample(pairs, rng.randint(0, min(2, len(pairs))))}
        db = KnotDatabase(Registry.simple(ids))
        for k, r in enumerate(rows):
            db.add(KnotRecord(f"k{k}", {v: Interval(x, x) for v, x in zip(ids, r)}))
        g = InequalityGraph(ids, [Edge(i, a, b) for i, (a, b) in enumerate(edges, 1)])
        got = {c.pair for c in enumerate_conjectures(db, g, ExclusionList(excl))}
        scan_mismatch += got != _naive_conj(ids, rows, edges, excl)

    basic_mismatch = 0
    for trial in range(300):
        n = rng.randint(3, 7)
        ids = [f"y{i}" for i in range(n)]
        forward = [(ids[i], ids[j]) for i in range(n) for j in range(i + 1, n)]
        base = set(rng.sample(forward, rng.randint(0, min(4, len(forward)))))
        closure = closure_of(base)
        pool = [p for p in forward if p not in closure]
        conj = set(rng.sample(pool, rng.randint(0, min(9, len(pool)))))
        g = InequalityGraph(ids, [Edge(i, a, b) for i, (a, b) in enumerate(sorted(base), 1)])
        ours = {c.pair for c in basic_conjectures(g, [Conjecture(a, b) for a, b in conj])}
        minimal = _minimal_generating(base, conj)
        basic_mismatch += not (len(minimal) == 1 and minimal[0] == ours)
    elapsed = time.perf_counter() - start
    ok = scan_mismatch == 0 and basic_mismatch == 0 and elapsed < 30
    verdict("7", ok, f"400 random databases, {scan_mismatch} scan mismatches; "
                     f"300 DAG instances, {basic_mismatch} reduction mismatches; "
                     f"{elapsed:.1f}s")
