"""Scheduled radio connectivity graphs and their structural checks.

A schedule is stored as one slot number per edge. Edges whose slot is ``None``
exist in the radio graph but are never scheduled, so they are absent from the
induced union graph.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import networkx as nx

from .errors import ModelError


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    weight: float = 1.0
    slot: int | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)

    def __str__(self) -> str:
        return f"({self.src},{self.dst})"


@dataclass(frozen=True)
class Violation:
    rule: str
    element: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.element}"


@dataclass(frozen=True)
class ScheduledGraph:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    source: str
    sinks: tuple[str, ...]
    Pi: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "sinks", tuple(self.sinks))

    @classmethod
    def build(cls, edges: Iterable[tuple], source: str, sinks: Sequence[str],
              Pi: int, nodes: Sequence[str] | None = None) -> "ScheduledGraph":
        """Convenience constructor from ``(src, dst, weight, slot)`` tuples."""
        es = tuple(e if isinstance(e, Edge) else Edge(*e) for e in edges)
        if nodes is None:
            seen: dict[str, None] = {source: None}
            for e in es:
                seen.setdefault(e.src)
                seen.setdefault(e.dst)
            for s in sinks:
                seen.setdefault(s)
            nodes = tuple(seen)
        return cls(tuple(nodes), es, source, tuple(sinks), Pi)

    @property
    def scheduled_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.slot is not None)

    def incoming(self, node: str, scheduled_only: bool = True) -> list[Edge]:
        pool = self.scheduled_edges if scheduled_only else self.edges
        return [e for e in pool if e.dst == node]

    def without(self, keys: Iterable[tuple[str, str]]) -> "ScheduledGraph":
        drop = set(keys)
        return replace(self, edges=tuple(e for e in self.edges if e.key not in drop))

    def edge(self, src: str, dst: str) -> Edge:
        for e in self.edges:
            if e.key == (src, dst):
                return e
        raise ModelError(f"no edge ({src},{dst})")

    def to_networkx(self, scheduled_only: bool = True) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for e in (self.scheduled_edges if scheduled_only else self.edges):
            g.add_edge(e.src, e.dst, weight=e.weight, slot=e.slot)
        return g

    def hop_count(self) -> int:
        """Number of scheduled edges; 1 means a direct single-hop link."""
        return len(self.scheduled_edges)

    def is_single_hop(self) -> bool:
        es = self.scheduled_edges
        return (len(es) == 1 and len(self.sinks) == 1
                and es[0].key == (self.source, self.sinks[0]))

    def check(self) -> "ScheduledGraph":
        """Raise :class:`ModelError` listing every violated invariant."""
        v = validate_topology(self)
        if v:
            raise ModelError("invalid scheduled graph: " + "; ".join(map(str, v)))
        return self


def validate_topology(g: ScheduledGraph) -> list[Violation]:
    """All invariant violations of ``g``; an empty list means well formed."""
    out: list[Violation] = []
    nodes = set(g.nodes)
    if len(nodes) != len(g.nodes):
        dup = [n for n, c in Counter(g.nodes).items() if c > 1]
        out.append(Violation("DuplicateNode", ",".join(dup)))
    for n in [g.source, *g.sinks]:
        if n not in nodes:
            out.append(Violation("UnknownNode", n))
    if not g.sinks:
        out.append(Violation("NoSinks", "sinks list is empty"))
    if g.source in g.sinks:
        out.append(Violation("SourceIsSink", g.source))
    if not (isinstance(g.Pi, int) and g.Pi >= 1):
        out.append(Violation("InvalidFrameLength", str(g.Pi)))
    counts = Counter(e.key for e in g.edges)
    for key, c in counts.items():
        if c > 1:
            out.append(Violation("EdgeScheduledTwice", f"({key[0]},{key[1]})"))
    for e in g.edges:
        if e.src not in nodes or e.dst not in nodes:
            out.append(Violation("UnknownNode", str(e)))
        if e.src == e.dst:
            out.append(Violation("SelfLoop", str(e)))
        if not (e.weight > 0):
            out.append(Violation("NonPositiveWeight", f"{e} weight={e.weight}"))
        if e.slot is not None and not (1 <= e.slot <= g.Pi):
            out.append(Violation("SlotOutOfRange", f"{e} slot={e.slot}"))
        if e.dst == g.source:
            out.append(Violation("SourceHasIncoming", str(e)))
        if e.src in g.sinks:
            out.append(Violation("SinkHasOutgoing", str(e)))
    dg = g.to_networkx(scheduled_only=False)
    if not nx.is_directed_acyclic_graph(dg):
        cycle = nx.find_cycle(dg)
        out.append(Violation("NotAcyclic", "->".join(u for u, _ in cycle)))
    return out


def induced_union_graph(g: ScheduledGraph) -> ScheduledGraph:
    """Subgraph keeping the edges scheduled in some slot of the frame."""
    return replace(g, edges=g.scheduled_edges)


def is_jointly_connected(g: ScheduledGraph) -> bool:
    reach = nx.descendants(g.to_networkx(), g.source)
    return all(s in reach for s in g.sinks)


@dataclass(frozen=True)
class TreeDiagnosis:
    is_tree: bool
    offending_nodes: tuple[str, ...] = ()
    unreachable: tuple[str, ...] = ()
    leaf_mismatch: tuple[str, ...] = ()


def is_scheduling_tree(g: ScheduledGraph) -> TreeDiagnosis:
    """Check that the induced graph is a tree rooted at the source whose leaves
    are exactly the declared sinks."""
    dg = g.to_networkx()
    offending = tuple(n for n in g.nodes if n != g.source and dg.in_degree(n) != 1)
    reach = nx.descendants(dg, g.source) | {g.source}
    unreachable = tuple(n for n in g.nodes if n not in reach)
    leaves = {n for n in g.nodes if dg.out_degree(n) == 0 and n != g.source}
    sinks = set(g.sinks)
    mismatch = tuple(n for n in g.nodes if (n in leaves) != (n in sinks))
    ok = not (offending or unreachable or mismatch)
    return TreeDiagnosis(ok, offending, unreachable, mismatch)


def trimmed(g: ScheduledGraph) -> ScheduledGraph:
    """Drop scheduled edges that lie on no source-to-sink path.

    Such edges carry no data that can reach a terminating node, so they never
    influence the network transfer or any failure signature.
    """
    dg = g.to_networkx()
    fwd = nx.descendants(dg, g.source) | {g.source}
    back: set[str] = set()
    for s in g.sinks:
        if s in dg:
            back |= nx.ancestors(dg, s) | {s}
    live = fwd & back
    keep = [e for e in g.scheduled_edges if e.src in live and e.dst in live]
    used = {g.source, *g.sinks} | {e.src for e in keep} | {e.dst for e in keep}
    return replace(g, nodes=tuple(n for n in g.nodes if n in used), edges=tuple(keep))


def _branch_slots(delay: int, depth: int) -> list[int]:
    # descending prefix of length `delay` gives delay-1 deferrals; the tail then
    # increases strictly and adds none
    return list(range(delay, 0, -1)) + list(range(delay + 1, depth + 1))


def design_observability_tree(n_S: int, leaf_delays: Sequence[int], depth: int,
                              source: str = "v_y") -> ScheduledGraph:
    """Tree with ``n_S`` disjoint branches of ``depth`` hops from ``source``.

    Branch ``i`` ends at terminating node ``v_{i+1}`` and is scheduled so that
    its unique path has frame delay ``leaf_delays[i]``. All weights are 1 and
    the frame length equals ``depth``.
    """
    if n_S < 1:
        raise ModelError("n_S must be >= 1")
    if depth < 1:
        raise ModelError("depth must be >= 1")
    if len(leaf_delays) != n_S:
        raise ModelError(f"expected {n_S} leaf delays, got {len(leaf_delays)}")
    for d in leaf_delays:
        if not 1 <= d <= depth:
            raise ModelError(
                f"leaf delay {d} infeasible with depth {depth} (need 1 <= d <= depth)")
    edges: list[Edge] = []
    nodes = [source]
    sinks = []
    for i, d in enumerate(leaf_delays, start=1):
        chain = [source] + [f"b{i}_{h}" for h in range(1, depth)] + [f"v_{i}"]
        nodes.extend(chain[1:])
        sinks.append(chain[-1])
        for (u, v), slot in zip(zip(chain, chain[1:]), _branch_slots(d, depth)):
            edges.append(Edge(u, v, 1.0, slot))
    return ScheduledGraph(tuple(nodes), tuple(edges), source, tuple(sinks), depth)
