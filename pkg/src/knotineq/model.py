"""Integer intervals, vertex transforms, parity classes and the knot database."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

INF = math.inf

# Values beyond this magnitude can only come from corrupt input.
MAX_MAGNITUDE = 2**62


class KnotIneqError(Exception):
    """Base class for all errors raised by this package."""


class Contradiction(KnotIneqError):
    """Bounds on one quantity became empty."""

    def __init__(self, message: str, *, left=None, right=None,
                 knot_id: str | None = None, vertex_id: str | None = None,
                 chain: tuple = ()):
        super().__init__(message)
        self.left = left
        self.right = right
        self.knot_id = knot_id
        self.vertex_id = vertex_id
        self.chain = chain

    def located(self, knot_id: str | None, vertex_id: str | None,
                chain: tuple = ()) -> "Contradiction":
        where = f"{knot_id}/{vertex_id}"
        return Contradiction(f"{where}: {self}", left=self.left, right=self.right,
                             knot_id=knot_id, vertex_id=vertex_id,
                             chain=chain or self.chain)


class IntervalOverflow(KnotIneqError, OverflowError):
    pass


class NonIntegral(KnotIneqError, ValueError):
    pass


class RegistryError(KnotIneqError, ValueError):
    pass


def fmt_bound(x: int | float) -> str:
    return "inf" if x == INF else str(int(x))


def parse_bound(text: str) -> int | float:
    t = text.strip().lower()
    if t in ("inf", "infty", "+inf", "∞"):
        return INF
    return int(t)


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed integer interval ``[lo, hi]``; ``hi`` may be ``INF``."""

    lo: int = 0
    hi: int | float = INF

    def __post_init__(self):
        if self.lo == INF or self.lo == -INF:
            raise ValueError("lower bound must be finite")
        if self.hi != INF and not float(self.hi).is_integer():
            raise ValueError(f"non-integer upper bound {self.hi!r}")
        if self.lo > self.hi:
            raise Contradiction(f"empty interval [{self.lo}, {fmt_bound(self.hi)}]")

    @classmethod
    def exact(cls, n: int) -> "Interval":
        return cls(n, n)

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def is_finite(self) -> bool:
        return self.hi != INF

    def __contains__(self, value) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        return self.lo <= value <= self.hi

    def __str__(self) -> str:
        return f"{self.lo}:{fmt_bound(self.hi)}"

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse the ``lo:hi`` cell format of database exports."""
        lo, sep, hi = text.partition(":")
        if not sep:
            raise ValueError(f"not an interval cell: {text!r}")
        return cls(int(lo), parse_bound(hi))


UNKNOWN = Interval(0, INF)


def meet(a: Interval, b: Interval) -> Interval:
    """Intersect two intervals, raising `Contradiction` if they are disjoint."""
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if lo > hi:
        raise Contradiction(f"[{a}] and [{b}] are disjoint", left=a, right=b)
    return Interval(lo, hi)


class Parity(Enum):
    EVEN = "even"
    ANY = "any"


def round_up_even(n: int) -> int:
    return n + (n % 2)


def round_down_even(x: int | float) -> int | float:
    if x == INF:
        return x
    return x - (x % 2)


def apply_parity(iv: Interval, parity: Parity) -> Interval:
    if parity is Parity.ANY:
        return iv
    lo, hi = round_up_even(iv.lo), round_down_even(iv.hi)
    if lo > hi:
        raise Contradiction(f"no even value in [{iv}]", left=iv)
    return Interval(lo, hi)


class TransformKind(Enum):
    AFFINE = "affine"
    ABS = "abs"
    CEIL_HALF = "ceilhalf"


@dataclass(frozen=True, slots=True)
class Transform:
    """Map from an invariant's natural units to its graph vertex.

    ``AFFINE`` is ``scale*x + offset``; ``ABS`` is ``scale*|x|``;
    ``CEIL_HALF`` is ``ceil(x/2)``.
    """

    kind: TransformKind
    scale: int = 1
    offset: int = 0

    @classmethod
    def parse(cls, text: str) -> "Transform":
        kind, *args = text.strip().split(":")
        try:
            if kind == "affine":
                scale, offset = (int(a) for a in args)
                return cls(TransformKind.AFFINE, scale, offset)
            if kind == "abs":
                (scale,) = (int(a) for a in args) if args else (1,)
                return cls(TransformKind.ABS, scale, 0)
            if kind == "ceilhalf" and not args:
                return cls(TransformKind.CEIL_HALF)
        except ValueError:
            pass
        raise RegistryError(f"bad transform {text!r}")

    def __str__(self) -> str:
        if self.kind is TransformKind.AFFINE:
            return f"affine:{self.scale}:{self.offset}"
        if self.kind is TransformKind.ABS:
            return f"abs:{self.scale}"
        return "ceilhalf"

    @property
    def invertible(self) -> bool:
        return self.kind is TransformKind.AFFINE


IDENTITY = Transform(TransformKind.AFFINE, 1, 0)


def _check_magnitude(*xs) -> None:
    for x in xs:
        if x != INF and x != -INF and abs(x) > MAX_MAGNITUDE:
            raise IntervalOverflow(f"value {x} outside the supported integer range")


def to_vertex(raw_lo: int, raw_hi: int | float, t: Transform) -> Interval:
    """Convert a raw invariant range (possibly signed) into vertex units."""
    _check_magnitude(raw_lo, raw_hi)
    if raw_lo > raw_hi:
        raise Contradiction(f"empty raw range [{raw_lo}, {fmt_bound(raw_hi)}]")
    if t.kind is TransformKind.AFFINE:
        lo = t.scale * raw_lo + t.offset
        hi = raw_hi if raw_hi == INF else t.scale * raw_hi + t.offset
    elif t.kind is TransformKind.ABS:
        if raw_lo <= 0 <= raw_hi:
            lo, hi = 0, max(-raw_lo, raw_hi)
        else:
            lo, hi = sorted((abs(raw_lo), abs(raw_hi)))
        hi = hi if hi == INF else t.scale * hi
        lo = t.scale * lo
    else:
        lo = -(-raw_lo // 2)
        hi = raw_hi if raw_hi == INF else -(-int(raw_hi) // 2)
    _check_magnitude(lo, hi)
    lo = max(lo, 0)
    if hi < lo:
        raise Contradiction(
            f"raw range [{raw_lo}, {fmt_bound(raw_hi)}] maps below zero under {t}")
    return Interval(lo, hi)


@dataclass(frozen=True, slots=True)
class ReportedRange:
    lo: int
    hi: int | float
    invertible: bool

    def __str__(self) -> str:
        body = f"[{self.lo}, {fmt_bound(self.hi)}]"
        return body if self.invertible else f"{body} (vertex units, not invertible)"


def from_vertex(iv: Interval, t: Transform) -> ReportedRange:
    """Report a vertex interval in the invariant's natural units where possible."""
    if not t.invertible:
        return ReportedRange(iv.lo, iv.hi, False)

    def back(x):
        if x == INF:
            return x
        q, r = divmod(x - t.offset, t.scale)
        if r:
            raise NonIntegral(f"{x} is not in the image of {t}")
        return q

    return ReportedRange(back(iv.lo), back(iv.hi), True)


class SourceClass(Enum):
    KNOTINFO = "knotinfo"
    REFERENCE = "reference"
    UNKNOWN = "unknown"


@dataclass(frozen=True, slots=True)
class VertexDef:
    id: str
    display: str
    base_invariant: str
    transform: Transform
    parity: Parity
    source_class: SourceClass


def _data_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, line.rstrip("\r\n").split("\t")


def data_path(name: str) -> Path:
    """Path of a bundled data file."""
    return Path(str(resources.files("knotineq") / "data" / name))


def read_parity_table(text: str) -> dict[str, Parity]:
    table: dict[str, Parity] = {}
    for lineno, cols in _data_lines(text):
        if len(cols) != 2:
            raise RegistryError(f"parity table line {lineno}: expected 2 columns")
        vid, cls = cols[0].strip(), cols[1].strip().lower()
        if vid in table:
            raise RegistryError(f"parity table line {lineno}: duplicate vertex {vid!r}")
        try:
            table[vid] = Parity(cls)
        except ValueError:
            raise RegistryError(f"parity table line {lineno}: bad class {cls!r}") from None
    return table


class Registry:
    """The ordered set of vertex definitions a database is built over."""

    def __init__(self, vertices: Iterable[VertexDef]):
        self.vertices: tuple[VertexDef, ...] = tuple(vertices)
        self._by_id = {v.id: v for v in self.vertices}
        if len(self._by_id) != len(self.vertices):
            raise RegistryError("duplicate vertex ids in registry")
        self.index = {v.id: i for i, v in enumerate(self.vertices)}

    @classmethod
    def from_text(cls, vertices_text: str, parity_text: str) -> "Registry":
        parity = read_parity_table(parity_text)
        defs = []
        for lineno, cols in _data_lines(vertices_text):
            if len(cols) != 5:
                raise RegistryError(f"vertex table line {lineno}: expected 5 columns")
            vid, display, base, transform, source = (c.strip() for c in cols)
            if vid not in parity:
                raise RegistryError(f"vertex {vid!r} has no parity entry")
            try:
                source_class = SourceClass(source.lower())
            except ValueError:
                raise RegistryError(f"vertex table line {lineno}: bad source {source!r}") from None
            defs.append(VertexDef(vid, display, base, Transform.parse(transform),
                                  parity[vid], source_class))
        extra = set(parity) - {d.id for d in defs}
        if extra:
            raise RegistryError(f"parity entries for unknown vertices: {sorted(extra)}")
        return cls(defs)

    @classmethod
    def load(cls, vertices_path: str | Path | None = None,
             parity_path: str | Path | None = None) -> "Registry":
        vp = Path(vertices_path) if vertices_path else data_path("vertices.tsv")
        pp = Path(parity_path) if parity_path else data_path("parity.tsv")
        return cls.from_text(vp.read_text(encoding="utf-8"), pp.read_text(encoding="utf-8"))

    @classmethod
    def simple(cls, ids: Iterable[str], even: Iterable[str] = ()) -> "Registry":
        """Identity-transform registry, mostly for tests and small experiments."""
        even = set(even)
        return cls(VertexDef(v, v, v, IDENTITY,
                             Parity.EVEN if v in even else Parity.ANY,
                             SourceClass.UNKNOWN) for v in ids)

    def __getitem__(self, vid: str) -> VertexDef:
        try:
            return self._by_id[vid]
        except KeyError:
            raise UnknownVertex(vid) from None

    def __contains__(self, vid: str) -> bool:
        return vid in self._by_id

    def __iter__(self) -> Iterator[VertexDef]:
        return iter(self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(v.id for v in self.vertices)

    def by_source(self, source: SourceClass) -> tuple[str, ...]:
        return tuple(v.id for v in self.vertices if v.source_class is source)

    def with_parity(self, parity: Mapping[str, Parity]) -> "Registry":
        from dataclasses import replace
        return Registry(replace(v, parity=parity.get(v.id, v.parity)) for v in self.vertices)


class UnknownVertex(KnotIneqError, KeyError):
    def __str__(self):
        return f"unknown vertex {self.args[0]!r}"


class UnknownKnot(KnotIneqError, KeyError):
    def __str__(self):
        return f"unknown knot {self.args[0]!r}"


class Side(Enum):
    LOWER = "lower"
    UPPER = "upper"


INGEST = "ingest"
PARITY = "parity"


def edge_cause(label: int) -> str:
    return f"edge:{label}"


def cause_label(cause: str) -> int | None:
    if cause.startswith("edge:"):
        return int(cause[5:])
    return None


@dataclass(frozen=True, slots=True)
class PropagationEvent:
    """One strict tightening of one bound.

    ``source`` names the ``(vertex, side)`` bound the new value was copied or
    rounded from; ``None`` for ingested values.
    """

    knot_id: str
    vertex_id: str
    side: Side
    old: int | float
    new: int | float
    cause: str
    seq: int
    source: tuple[str, Side] | None = None

    def __post_init__(self):
        tighter = self.new > self.old if self.side is Side.LOWER else self.new < self.old
        if not tighter:
            raise ValueError(f"event does not tighten: {self}")


@dataclass
class KnotRecord:
    knot_id: str
    values: dict[str, Interval]

    def copy(self) -> "KnotRecord":
        return KnotRecord(self.knot_id, dict(self.values))


@dataclass
class KnotDatabase:
    registry: Registry
    records: list[KnotRecord] = field(default_factory=list)
    provenance: list[PropagationEvent] = field(default_factory=list)
    contradictions: list[Contradiction] = field(default_factory=list)

    def __post_init__(self):
        self._index = {}
        for i, rec in enumerate(self.records):
            self._check(rec)
            self._index[rec.knot_id] = i

    def _check(self, rec: KnotRecord) -> None:
        if rec.knot_id in self._index:
            raise DuplicateKnot(rec.knot_id)
        missing = set(self.registry.ids) - set(rec.values)
        extra = set(rec.values) - set(self.registry.ids)
        if missing or extra:
            raise RegistryError(
                f"record {rec.knot_id}: missing {sorted(missing)}, unknown {sorted(extra)}")
        for vid, iv in rec.values.items():
            if iv.lo < 0:
                raise ValueError(f"record {rec.knot_id}/{vid}: negative lower bound")

    def add(self, rec: KnotRecord) -> None:
        self._check(rec)
        self._index[rec.knot_id] = len(self.records)
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[KnotRecord]:
        return iter(self.records)

    def __contains__(self, knot_id: str) -> bool:
        return knot_id in self._index

    def __getitem__(self, knot_id: str) -> KnotRecord:
        try:
            return self.records[self._index[knot_id]]
        except KeyError:
            raise UnknownKnot(knot_id) from None

    @property
    def knot_ids(self) -> list[str]:
        return [r.knot_id for r in self.records]

    def copy(self) -> "KnotDatabase":
        return KnotDatabase(self.registry, [r.copy() for r in self.records],
                            list(self.provenance), list(self.contradictions))

    def same_values(self, other: "KnotDatabase") -> bool:
        return (self.registry.ids == other.registry.ids
                and [(r.knot_id, r.values) for r in self.records]
                == [(r.knot_id, r.values) for r in other.records])

    def events_for(self, knot_id: str) -> list[PropagationEvent]:
        return [e for e in self.provenance if e.knot_id == knot_id]


class DuplicateKnot(KnotIneqError, ValueError):
    def __str__(self):
        return f"duplicate knot {self.args[0]!r}"
