"""Slot-level data flow through a scheduled relay graph and the frame-level
delay coefficients it induces.

Two independent routes produce the coefficients: aggregation over enumerated
source-to-sink paths, and the impulse response of the slot recursion itself.
Both are generic over the number type, so ``fractions.Fraction`` weights give
exact results.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import ModelError
from .graph import Edge, ScheduledGraph
from .lti import FIRTransfer

EdgeKey = tuple[str, str]

ZERO_OUT = "zero_out"
HOLD_LAST = "hold_last"


@dataclass(frozen=True)
class SlotState:
    mu: Mapping[EdgeKey, float]
    mu_c: float
    slot_index: int = 1
    frame_index: int = 0


def initial_state(g: ScheduledGraph, mu_c=0.0, initial=0.0) -> SlotState:
    return SlotState({e.key: initial for e in g.edges}, mu_c, 1, 0)


def _content(g: ScheduledGraph, node: str, mu: Mapping[EdgeKey, float], mu_c):
    if node == g.source:
        return mu_c
    total = 0
    for e in g.edges:
        if e.dst == node:
            total = total + mu[e.key]
    return total


def step_slot(s: SlotState, g: ScheduledGraph) -> SlotState:
    """Execute slot ``s.slot_index``: every edge scheduled there copies the
    weighted content of its tail, all reading pre-update values."""
    h = s.slot_index
    if not 1 <= h <= g.Pi:
        raise ModelError(f"slot index {h} outside 1..{g.Pi}")
    mu = dict(s.mu)
    for e in g.edges:
        if e.slot == h:
            mu[e.key] = e.weight * _content(g, e.src, s.mu, s.mu_c)
    if h == g.Pi:
        return SlotState(mu, s.mu_c, 1, s.frame_index + 1)
    return SlotState(mu, s.mu_c, h + 1, s.frame_index)


class SlotNetwork:
    """Mutable slot-level executor used by the simulators.

    ``fail(key, protocol)`` makes an edge faulty from the next executed slot:
    under ``zero_out`` its scheduled transmissions deliver 0, under
    ``hold_last`` its value is frozen.
    """

    def __init__(self, g: ScheduledGraph, initial=0.0):
        self.g = g
        self.mu: dict[EdgeKey, float] = {e.key: initial for e in g.edges}
        self._inc: dict[str, list[EdgeKey]] = {n: [] for n in g.nodes}
        for e in g.edges:
            self._inc[e.dst].append(e.key)
        self._by_slot: dict[int, list[Edge]] = {h: [] for h in range(1, g.Pi + 1)}
        for e in g.edges:
            if e.slot is not None:
                self._by_slot[e.slot].append(e)
        self.failed: dict[EdgeKey, str] = {}

    def fail(self, key: EdgeKey, protocol: str = ZERO_OUT) -> None:
        if key not in self.mu:
            raise ModelError(f"no edge {key} in graph")
        if protocol not in (ZERO_OUT, HOLD_LAST):
            raise ModelError(f"unknown protocol {protocol!r}")
        self.failed[key] = protocol

    def sink_values(self) -> list:
        out = []
        for s in self.g.sinks:
            total = 0
            for k in self._inc[s]:
                total = total + self.mu[k]
            out.append(total)
        return out

    def content(self, node: str, mu_c):
        if node == self.g.source:
            return mu_c
        total = 0
        for k in self._inc[node]:
            total = total + self.mu[k]
        return total

    def run_frame(self, mu_c, log: list | None = None) -> None:
        for h in range(1, self.g.Pi + 1):
            updates = []
            for e in self._by_slot[h]:
                mode = self.failed.get(e.key)
                if mode == HOLD_LAST:
                    continue
                if mode == ZERO_OUT:
                    updates.append((e.key, 0 * e.weight))
                else:
                    updates.append((e.key, e.weight * self.content(e.src, mu_c)))
            for k, v in updates:
                self.mu[k] = v
            if log is not None:
                log.append(dict(self.mu))


def run_network(g: ScheduledGraph, inputs: Sequence, initial=0.0,
                failures: Mapping[EdgeKey, str] | None = None) -> dict[str, list]:
    """Per-sink output sequences; entry k is sampled at the start of frame k."""
    net = SlotNetwork(g, initial)
    for key, proto in (failures or {}).items():
        net.fail(key, proto)
    out: dict[str, list] = {s: [] for s in g.sinks}
    for u in inputs:
        for s, val in zip(g.sinks, net.sink_values()):
            out[s].append(val)
        net.run_frame(u)
    return out


@dataclass(frozen=True)
class PathDelay:
    path: tuple[Edge, ...]
    weight: float
    delay: int

    @property
    def keys(self) -> tuple[EdgeKey, ...]:
        return tuple(e.key for e in self.path)


def path_delay(path: Sequence[Edge]) -> int:
    """One frame, plus one more for each hop whose slot does not come strictly
    after the previous hop's slot."""
    return 1 + sum(1 for a, b in zip(path, path[1:]) if b.slot <= a.slot)


def enumerate_path_delays(g: ScheduledGraph, sink: str) -> list[PathDelay]:
    out_edges: dict[str, list[Edge]] = {}
    for e in g.scheduled_edges:
        out_edges.setdefault(e.src, []).append(e)
    found: list[PathDelay] = []
    stack: list[Edge] = []

    def walk(node: str) -> None:
        if node == sink and stack:
            w = 1
            for e in stack:
                w = w * e.weight
            found.append(PathDelay(tuple(stack), w, path_delay(stack)))
            return
        for e in out_edges.get(node, ()):
            stack.append(e)
            walk(e.dst)
            stack.pop()

    walk(g.source)
    return found


def aggregate_gamma(paths: Iterable[PathDelay], D: int | None = None) -> list:
    paths = list(paths)
    Dmax = max((p.delay for p in paths), default=0)
    size = max(Dmax, D or 0)
    if D is not None and Dmax > D:
        raise ModelError(f"path delay {Dmax} exceeds requested order {D}")
    gamma = [0] * size
    for p in paths:
        gamma[p.delay - 1] = gamma[p.delay - 1] + p.weight
    return gamma


def gamma_coefficients(g: ScheduledGraph, sink: str, D: int | None = None) -> list:
    """Coefficients gamma(1..D) by path enumeration; all-zero if unreachable."""
    return aggregate_gamma(enumerate_path_delays(g, sink), D)


def compute_gamma(g: ScheduledGraph, sink: str) -> FIRTransfer:
    paths = enumerate_path_delays(g, sink)
    if not paths:
        raise ModelError(
            f"sink {sink!r} is not reachable from {g.source!r} in the scheduled graph")
    return FIRTransfer(tuple(float(v) for v in aggregate_gamma(paths)))


def gamma_by_simulation(g: ScheduledGraph, sink: str, one=1.0) -> list:
    """Impulse response of the slot recursion, trailing zeros removed.

    Acyclicity bounds every path by ``|V|`` hops, hence the delay by ``|V|``
    frames; ``|V| * Pi + Pi`` frames is a generous horizon.
    """
    frames = len(g.nodes) * g.Pi + g.Pi
    zero = one - one
    u = [one] + [zero] * frames
    y = run_network(g, u, initial=zero)[sink][1:]
    while y and y[-1] == 0:
        y.pop()
    return y
