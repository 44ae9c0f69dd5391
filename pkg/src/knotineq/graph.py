"""The inequality graph: loading, reachability, closure, reduction and DOT export."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from . import model
from .model import KnotIneqError, Registry, data_path

Pair = tuple[str, str]


class GraphError(KnotIneqError, ValueError):
    pass


class DuplicateEdge(GraphError):
    pass


class UnknownVertex(GraphError, model.UnknownVertex):
    def __str__(self):
        return str(self.args[0])


class CycleDetected(GraphError):
    pass


class LabelGap(GraphError):
    pass


@dataclass(frozen=True, slots=True)
class Edge:
    """``greater(K) >= lesser(K)`` for every nontrivial knot ``K``."""

    label: int
    greater: str
    lesser: str
    citation: str = ""

    @property
    def pair(self) -> Pair:
        return (self.greater, self.lesser)


class InequalityGraph:
    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self.edges: tuple[Edge, ...] = tuple(sorted(edges, key=lambda e: e.label))
        self._validate()
        self.by_label = {e.label: e for e in self.edges}
        self.incident: dict[str, tuple[Edge, ...]] = {
            v: tuple(e for e in self.edges if v in e.pair) for v in self.vertices}

    def _validate(self) -> None:
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise GraphError("duplicate vertex in vertex list")
        seen_pairs: set[Pair] = set()
        seen_labels: set[int] = set()
        for e in self.edges:
            for end in e.pair:
                if end not in vs:
                    raise UnknownVertex(f"edge {e.label}: unknown vertex {end!r}")
            if e.greater == e.lesser:
                raise CycleDetected(f"edge {e.label} is a self-loop on {e.greater!r}")
            if e.pair in seen_pairs:
                raise DuplicateEdge(f"edge {e.label} repeats {e.greater} >= {e.lesser}")
            if e.label in seen_labels:
                raise DuplicateEdge(f"label {e.label} used twice")
            seen_pairs.add(e.pair)
            seen_labels.add(e.label)
        if seen_labels and seen_labels != set(range(1, len(self.edges) + 1)):
            missing = sorted(set(range(1, max(seen_labels) + 1)) - seen_labels)
            raise LabelGap(f"edge labels must cover 1..{len(self.edges)}; missing {missing}")
        cycle = find_cycle(self.vertices, (e.pair for e in self.edges))
        if cycle:
            raise CycleDetected("cycle: " + " >= ".join(cycle))

    def __repr__(self) -> str:
        return f"InequalityGraph(|V|={len(self.vertices)}, |E|={len(self.edges)})"

    @property
    def pairs(self) -> set[Pair]:
        return {e.pair for e in self.edges}

    def check_registry(self, registry: Registry) -> None:
        missing = [v for v in self.vertices if v not in registry]
        if missing:
            raise UnknownVertex(f"graph vertices not in registry: {missing}")


def find_cycle(vertices: Iterable[str], pairs: Iterable[Pair]) -> list[str] | None:
    """Return one directed cycle as a vertex list (first vertex repeated), or None."""
    adj: dict[str, list[str]] = {v: [] for v in vertices}
    for a, b in pairs:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, [])
    state = dict.fromkeys(adj, 0)  # 0 new, 1 on stack, 2 done
    for root in adj:
        if state[root]:
            continue
        stack = [(root, iter(adj[root]))]
        path = [root]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                path.pop()
            elif state[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            elif state[nxt] == 0:
                state[nxt] = 1
                stack.append((nxt, iter(adj[nxt])))
                path.append(nxt)
    return None


def parse_graph(text: str) -> InequalityGraph:
    """Parse the tab-separated graph description format."""
    section = None
    vertices: list[str] = []
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("vertices", "edges"):
                raise GraphError(f"line {lineno}: unknown section {line}")
            continue
        if section == "vertices":
            vertices.append(line)
        elif section == "edges":
            cols = [c.strip() for c in raw.split("\t")]
            if len(cols) not in (3, 4):
                raise GraphError(f"line {lineno}: expected label, greater, lesser[, citation]")
            try:
                label = int(cols[0])
            except ValueError:
                raise GraphError(f"line {lineno}: bad label {cols[0]!r}") from None
            edges.append(Edge(label, cols[1], cols[2], cols[3] if len(cols) == 4 else ""))
        else:
            raise GraphError(f"line {lineno}: content before any section header")
    return InequalityGraph(vertices, edges)


def load_graph(path: str | Path | None = None) -> InequalityGraph:
    p = Path(path) if path else data_path("graph.tsv")
    return parse_graph(p.read_text(encoding="utf-8"))


def successors(pairs: Iterable[Pair]) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {}
    for a, b in pairs:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set())
    return adj


def reachable_from(adj: Mapping[str, Iterable[str]], src: str) -> set[str]:
    """Vertices reachable from ``src`` by a path of length >= 1."""
    seen: set[str] = set()
    queue = deque(adj.get(src, ()))
    while queue:
        v = queue.popleft()
        if v in seen:
            continue
        seen.add(v)
        queue.extend(w for w in adj.get(v, ()) if w not in seen)
    return seen


def closure_of(pairs: Iterable[Pair]) -> set[Pair]:
    """Irreflexive transitive closure of a relation (cycles yield (x, x) pairs)."""
    adj = successors(pairs)
    return {(a, b) for a in adj for b in reachable_from(adj, a)}


def transitive_closure(g: InequalityGraph) -> set[Pair]:
    return closure_of(g.pairs)


def transitive_reduction_modulo(base: Iterable[Pair], extra: Iterable[Pair]) -> set[Pair]:
    """Smallest subset of ``extra`` that, together with ``base``, still implies all of ``extra``.

    Pairs are dropped greedily in ascending lexicographic order whenever the
    remaining pairs plus ``base`` still derive them. On acyclic input the
    result does not depend on the order; on cyclic input the order fixes
    which representative of each equal-strength class survives.
    """
    base = set(base)
    kept = sorted(set(extra))
    for pair in list(kept):
        rest = [p for p in kept if p != pair]
        adj = successors(base | set(rest))
        if pair[1] in reachable_from(adj, pair[0]):
            kept = rest
    return set(kept)


def _dot_id(v: str) -> str:
    return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(g: InequalityGraph, labels: Mapping[str, str] | None = None,
               name: str = "inequalities") -> str:
    """Render the graph as DOT. Arrows point from the greater to the lesser side."""
    labels = labels or {}
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for v in g.vertices:
        lines.append(f"  {_dot_id(v)} [label={_dot_id(labels.get(v, v))}];")
    for e in g.edges:
        attrs = f'label="{e.label}"'
        if e.citation:
            attrs += f", tooltip={_dot_id(e.citation)}"
        lines.append(f"  {_dot_id(e.greater)} -> {_dot_id(e.lesser)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
