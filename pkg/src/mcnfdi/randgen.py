"""Random instances for property tests and the self-test: scheduled DAGs,
minimal stable plants, observability trees and non-trees, and whole MCNs for
each network case."""

from __future__ import annotations

import numpy as np

from .errors import ModelError
from .graph import Edge, ScheduledGraph, is_scheduling_tree, trimmed, validate_topology
from .lti import ContinuousLTI
from .model import MCN


def _weight(rng: np.random.Generator) -> float:
    # uniform on (0, 2]
    return float(2.0 - 2.0 * rng.random())


def random_dag(rng: np.random.Generator, max_nodes: int = 8, max_pi: int = 6,
               n_sinks: int = 1, density: float = 0.4, source: str = "s",
               sink_prefix: str = "t") -> ScheduledGraph:
    """Acyclic scheduled graph with a guaranteed path from the source to every
    sink. Nodes are topologically ordered; sinks come last and have no
    outgoing edges."""
    n = int(rng.integers(n_sinks + 1, max_nodes + 1))
    Pi = int(rng.integers(1, max_pi + 1))
    inner = [f"m{i}" for i in range(1, n - n_sinks)]
    sinks = [f"{sink_prefix}{i}" for i in range(1, n_sinks + 1)]
    order = [source] + inner + sinks
    pos = {v: i for i, v in enumerate(order)}
    pairs: set[tuple[str, str]] = set()
    for t in sinks:
        # random increasing walk source -> t through interior nodes
        path = [source] + sorted(rng.choice(inner, size=int(rng.integers(0, len(inner) + 1)),
                                            replace=False).tolist(), key=pos.get) + [t]
        pairs.update(zip(path, path[1:]))
    for i, u in enumerate(order[:len(order) - n_sinks]):
        for v in order[i + 1:]:
            if rng.random() < density:
                pairs.add((u, v))
    edges = tuple(Edge(u, v, _weight(rng), int(rng.integers(1, Pi + 1)))
                  for u, v in sorted(pairs, key=lambda p: (pos[p[0]], pos[p[1]])))
    return ScheduledGraph(tuple(order), edges, source, tuple(sinks), Pi)


def random_plant(rng: np.random.Generator, n: int | None = None,
                 margin: float = 0.2, tries: int = 100) -> ContinuousLTI:
    """Minimal SISO plant with every eigenvalue real part <= -margin."""
    for _ in range(tries):
        k = int(rng.integers(1, 4)) if n is None else n
        A = rng.standard_normal((k, k))
        shift = max(np.linalg.eigvals(A).real.max() + margin, 0.0)
        A = A - shift * np.eye(k)
        B = rng.standard_normal((k, 1))
        C = rng.standard_normal((1, k))
        try:
            return ContinuousLTI(A, B, C, minimality_tol=1e-6)
        except ModelError:
            continue
    raise ModelError("could not draw a minimal plant")


def single_hop(source: str, sink: str, Pi: int, slot: int = 1) -> ScheduledGraph:
    return ScheduledGraph.build([(source, sink, 1.0, slot)], source, [sink], Pi)


def random_tree(rng: np.random.Generator, n_S: int, Pi: int, max_inner: int = 4,
                source: str = "v_y") -> ScheduledGraph:
    """Random tree rooted at ``source`` whose leaves are exactly
    ``v_1..v_{n_S}``; interior nodes are attached to random earlier nodes and
    every interior node gets at least one child."""
    inner = [f"m{i}" for i in range(1, int(rng.integers(0, max_inner + 1)) + 1)]
    parent: dict[str, str] = {}
    placed = [source]
    for v in inner:
        parent[v] = placed[int(rng.integers(len(placed)))]
        placed.append(v)
    sinks = [f"v_{i}" for i in range(1, n_S + 1)]
    childless = [v for v in inner if v not in parent.values()]
    for i, t in enumerate(sinks):
        if childless:
            parent[t] = childless.pop()
        else:
            parent[t] = placed[int(rng.integers(len(placed)))]
    while childless:
        # more dangling interior nodes than leaves: splice them out
        v = childless.pop()
        del parent[v]
        inner.remove(v)
        placed.remove(v)
        childless = [u for u in inner if u not in parent.values()]
    nodes = [source] + inner + sinks
    edges = tuple(Edge(parent[v], v, _weight(rng), int(rng.integers(1, Pi + 1)))
                  for v in nodes[1:])
    return ScheduledGraph(tuple(nodes), edges, source, tuple(sinks), Pi)


def random_non_tree(rng: np.random.Generator, n_S: int, Pi: int, max_inner: int = 4,
                    source: str = "v_y", tries: int = 200) -> ScheduledGraph:
    """A random tree plus one extra scheduled edge ``u -> v`` (``v`` not an
    ancestor of ``u``), so some node has two incoming links and every link
    still lies on a sensor-to-terminal path."""
    for _ in range(tries):
        t = random_tree(rng, n_S, Pi, max_inner, source)
        par = {e.dst: e.src for e in t.edges}
        existing = {e.key for e in t.edges}

        def ancestors(x: str) -> set[str]:
            out = set()
            while x in par:
                x = par[x]
                out.add(x)
            return out

        sinks = set(t.sinks)
        cands = [(u, v) for u in t.nodes if u not in sinks for v in t.nodes
                 if v != source and v != u and (u, v) not in existing
                 and v not in ancestors(u)]
        if not cands:
            continue
        u, v = cands[int(rng.integers(len(cands)))]
        g = ScheduledGraph(t.nodes, t.edges + (Edge(u, v, _weight(rng),
                                                    int(rng.integers(1, Pi + 1))),),
                           source, t.sinks, Pi)
        if not validate_topology(g) and not is_scheduling_tree(g).is_tree \
                and len(trimmed(g).scheduled_edges) == len(g.scheduled_edges):
            return g
    raise ModelError("could not draw a non-tree observability graph")


def random_multihop_ctrl(rng: np.random.Generator, Pi: int, max_nodes: int = 6,
                         tries: int = 200) -> ScheduledGraph:
    for _ in range(tries):
        g = random_dag(rng, max_nodes=max_nodes, max_pi=Pi, source="v_c", sink_prefix="v_u")
        g = ScheduledGraph(tuple("v_u" if n == "v_u1" else n for n in g.nodes),
                           tuple(Edge(e.src, "v_u" if e.dst == "v_u1" else e.dst, e.weight,
                                      min(e.slot, Pi)) for e in g.edges),
                           "v_c", ("v_u",), Pi)
        g = trimmed(g)
        if not g.is_single_hop() and not validate_topology(g):
            return g
    raise ModelError("could not draw a multi-hop controllability graph")


CASES = ("GRmultiGOsingle", "GRsingleGOmulti", "BothMulti", "BothSingle")


def random_mcn(rng: np.random.Generator, case: str, tree: bool | None = None,
               max_n_S: int = 3, max_pi: int = 4, delta: float | None = None) -> MCN:
    """Random network of the requested case. For multi-hop observability
    graphs ``tree`` selects a tree (True), a non-tree (False) or either."""
    if case not in CASES:
        raise ModelError(f"unknown case {case!r}")
    Pi = int(rng.integers(2, max_pi + 1))
    plant = random_plant(rng)
    dlt = float(rng.uniform(0.02, 0.2)) if delta is None else delta
    r_multi = case in ("GRmultiGOsingle", "BothMulti")
    o_multi = case in ("GRsingleGOmulti", "BothMulti")
    g_R = random_multihop_ctrl(rng, Pi) if r_multi else single_hop(
        "v_c", "v_u", Pi, int(rng.integers(1, Pi + 1)))
    if o_multi:
        want_tree = bool(rng.integers(2)) if tree is None else tree
        for _ in range(100):
            n_S = int(rng.integers(1, max_n_S + 1))
            g_O = (random_tree if want_tree else random_non_tree)(rng, n_S, Pi)
            if not g_O.is_single_hop():
                break
        else:
            raise ModelError("could not draw a multi-hop observability graph")
    else:
        g_O = single_hop("v_y", "v_1", Pi, int(rng.integers(1, Pi + 1)))
    return MCN(plant, g_R, g_O, dlt)
