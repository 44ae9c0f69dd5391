"""Search for conjectural inequalities between vertices, and their basic subset."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import InequalityGraph, Pair, transitive_closure, transitive_reduction_modulo
from .model import INF, KnotDatabase, KnotIneqError, _data_lines, data_path
from .propagate import first_tightening

SAMPLE_SIZE = 3


class NotAFixedPoint(KnotIneqError):
    pass


class Status(Enum):
    CANDIDATE = "Candidate"
    REJECTED = "Rejected"
    CONJ = "Conj"
    BASIC = "BasicConj"


class ExclusionList:
    """Unordered vertex pairs known to be incomparable."""

    def __init__(self, pairs: Iterable[Pair] = ()):
        self.pairs = frozenset(frozenset(p) for p in pairs)

    def __contains__(self, pair: Pair) -> bool:
        return frozenset(pair) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    @classmethod
    def from_text(cls, text: str) -> "ExclusionList":
        pairs = []
        for lineno, cols in _data_lines(text):
            if len(cols) != 2:
                raise ValueError(f"exclusion line {lineno}: expected two vertex ids")
            pairs.append((cols[0].strip(), cols[1].strip()))
        return cls(pairs)

    @classmethod
    def load(cls, path: str | Path | None = None) -> "ExclusionList":
        p = Path(path) if path else data_path("exclusions.tsv")
        return cls.from_text(p.read_text(encoding="utf-8"))


@dataclass
class Conjecture:
    """Candidate inequality ``greater >= lesser`` with its witness tallies."""

    greater: str
    lesser: str
    violations: int = 0
    equalities: int = 0
    stricts: int = 0
    undetermined: int = 0
    equality_samples: list[str] = field(default_factory=list)
    strict_samples: list[str] = field(default_factory=list)
    status: Status = Status.CANDIDATE
    reason: str = ""

    @property
    def pair(self) -> Pair:
        return (self.greater, self.lesser)

    def __str__(self) -> str:
        return f"{self.lesser} <= {self.greater}"


def _bounds(db: KnotDatabase):
    ids = db.registry.ids
    big = np.iinfo(np.int64).max
    lo = np.array([[r.values[v].lo for v in ids] for r in db.records], dtype=np.int64)
    hi = np.array([[big if r.values[v].hi == INF else r.values[v].hi for v in ids]
                   for r in db.records], dtype=np.int64)
    return lo.reshape(len(db), len(ids)), hi.reshape(len(db), len(ids))


def scan_pairs(db: KnotDatabase, g: InequalityGraph, excl: ExclusionList | None = None, *,
               exact_only: bool = False, check_fixed_point: bool = True) -> list[Conjecture]:
    """Classify every ordered vertex pair; pairs passing all tests get status Conj.

    Witness semantics are certified: a knot violates ``X >= Y`` only when
    ``hi(X) < lo(Y)``, is a strict witness when ``lo(X) > hi(Y)``, and an
    equality witness when both cells are exact and equal. Anything else is
    undetermined. With ``exact_only`` only knots where both cells are exact
    are looked at; the skipped knots are tallied as undetermined.
    """
    if check_fixed_point:
        stale = first_tightening(db, g)
        if stale:
            raise NotAFixedPoint(
                f"database is not at the propagation fixed point ({stale[0]}/{stale[1]})")
    excl = excl or ExclusionList()
    closure = transitive_closure(g)
    ids = db.registry.ids
    vertices = set(g.vertices)
    knots = np.array(db.knot_ids, dtype=object)
    lo, hi = _bounds(db)
    exact = lo == hi

    out = []
    for x, gx in enumerate(ids):
        for y, ly in enumerate(ids):
            if x == y:
                continue
            c = Conjecture(gx, ly)
            out.append(c)
            if gx not in vertices or ly not in vertices:
                c.status, c.reason = Status.REJECTED, "not a graph vertex"
                continue
            if (gx, ly) in closure:
                c.status, c.reason = Status.REJECTED, "implied by the graph"
                continue
            if (gx, ly) in excl:
                c.status, c.reason = Status.REJECTED, "excluded as incomparable"
                continue
            scanned = exact[:, x] & exact[:, y] if exact_only else np.ones(len(knots), bool)
            viol = scanned & (hi[:, x] < lo[:, y])
            strict = scanned & (lo[:, x] > hi[:, y])
            eq = scanned & exact[:, x] & exact[:, y] & (lo[:, x] == lo[:, y])
            c.violations = int(viol.sum())
            c.stricts = int(strict.sum())
            c.equalities = int(eq.sum())
            c.undetermined = len(knots) - c.violations - c.stricts - c.equalities
            c.equality_samples = list(knots[eq][:SAMPLE_SIZE])
            c.strict_samples = list(knots[strict][:SAMPLE_SIZE])
            if c.violations:
                c.status, c.reason = Status.REJECTED, "violated"
            elif not c.equalities:
                c.status, c.reason = Status.REJECTED, "no equality witness"
            elif not c.stricts:
                c.status, c.reason = Status.REJECTED, "no strict witness"
            else:
                c.status = Status.CONJ
    return out


def enumerate_conjectures(db: KnotDatabase, g: InequalityGraph,
                          excl: ExclusionList | None = None, *, exact_only: bool = False,
                          check_fixed_point: bool = True) -> list[Conjecture]:
    return [c for c in scan_pairs(db, g, excl, exact_only=exact_only,
                                  check_fixed_point=check_fixed_point)
            if c.status is Status.CONJ]


def basic_conjectures(g: InequalityGraph, conj: Iterable[Conjecture]) -> list[Conjecture]:
    """Members of ``conj`` not derivable from the graph plus the other members."""
    conj = list(conj)
    keep = transitive_reduction_modulo(transitive_closure(g), [c.pair for c in conj])
    basic = []
    for c in conj:
        if c.pair in keep:
            c.status = Status.BASIC
            basic.append(c)
    return basic


REPORT_FIELDS = ["greater", "lesser", "status", "equality_witnesses", "strict_witnesses",
                 "undetermined", "sample_equality_knot", "sample_strict_knot"]


def conjecture_report(conjs: Iterable[Conjecture]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for c in conjs:
        w.writerow([c.greater, c.lesser, c.status.value, c.equalities, c.stricts,
                    c.undetermined, (c.equality_samples or [""])[0],
                    (c.strict_samples or [""])[0]])
    return buf.getvalue()
