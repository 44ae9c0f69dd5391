"""Interval bound propagation over a graph of knot-invariant inequalities."""

from .graph import Edge, InequalityGraph, load_graph, transitive_closure, transitive_reduction_modulo
from .model import INF, Interval, KnotDatabase, Registry, apply_parity, meet, to_vertex, from_vertex
from .propagate import diff, propagate

__version__ = "0.1.0"

__all__ = [
    "Edge", "INF", "InequalityGraph", "Interval", "KnotDatabase", "Registry", "apply_parity",
    "diff", "from_vertex", "load_graph", "meet", "propagate", "to_vertex", "transitive_closure",
    "transitive_reduction_modulo",
]
