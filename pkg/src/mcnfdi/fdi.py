"""Failure signatures of link sets, their equivalence classes, and the
detectability classifier.

Failures follow the zero-out protocol here: a receiving node discards the
contribution of a faulty incoming link. Removing a link set from a graph
therefore just drops every path through it, and each class of link sets is
identified by the resulting ``(A - A^f, B - B^f)`` pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import EnumerationBudgetError, InconsistencyError, ModelError
from .flow import ZERO_OUT, HOLD_LAST, enumerate_path_delays, gamma_coefficients
from .graph import TreeDiagnosis, is_scheduling_tree, trimmed
from .model import CTRL, MCN, OBS
from .subspace import (
    DEFAULT_TOL,
    Subspace,
    ToleranceConfig,
    efprg_check,
    kernel,
    orth_complement,
    span,
    sum_,
)

TaggedEdge = tuple[str, str, str]

DEFAULT_EXHAUSTIVE_LIMIT = 16
DEFAULT_SUM_BUDGET = 2_000_000
SIGNATURE_TOL = 1e-9


@dataclass(frozen=True)
class FailureConfig:
    """A set of faulty links, each tagged ``("R" | "O", src, dst)``.

    ``nu`` is the constant offset carried by the hold-last protocol; it is
    informational (the simulator realizes hold-last by freezing link values).
    """

    edges: frozenset = frozenset()
    protocol: str = ZERO_OUT
    nu: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        if self.protocol not in (ZERO_OUT, HOLD_LAST):
            raise ModelError(f"unknown protocol {self.protocol!r}")

    def validate(self, model: MCN) -> "FailureConfig":
        for tag, u, v in self.edges:
            model.graph(tag).edge(u, v)
        return self

    def on(self, tag: str) -> set[tuple[str, str]]:
        return {(u, v) for t, u, v in self.edges if t == tag}


def _as_config(f) -> FailureConfig:
    if isinstance(f, FailureConfig):
        return f
    return FailureConfig(frozenset(f))


def faulty_gammas(model: MCN, f) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients of both networks with ``f``'s links removed, padded to the
    nominal orders."""
    f = _as_config(f).validate(model)
    gR_graph = model.g_R.without(f.on(CTRL))
    gO_graph = model.g_O.without(f.on(OBS))
    gR = np.array(gamma_coefficients(gR_graph, model.g_R.sinks[0], model.D_R), float)
    gO = np.vstack([np.array(gamma_coefficients(gO_graph, s, model.D_O), float)
                    for s in model.g_O.sinks])
    return gR, gO


def faulty_realization(model: MCN, f) -> tuple[np.ndarray, np.ndarray]:
    f = _as_config(f)
    if f.protocol != ZERO_OUT:
        raise ModelError("faulty realizations are defined for the zero-out protocol")
    gR, gO = faulty_gammas(model, f)
    sys = model.realize(gR, gO)
    return np.array(sys.A), np.array(sys.B)


@dataclass(frozen=True, eq=False)
class FailureSignature:
    dA: np.ndarray
    dB: np.ndarray
    image: Subspace
    delta_R: np.ndarray
    delta_O: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.delta_R, self.delta_O.ravel()])

    def is_zero(self) -> bool:
        return not np.any(self.vector)


def _signature_from_deltas(model: MCN, delta_R: np.ndarray, delta_O: np.ndarray,
                           tol: ToleranceConfig) -> FailureSignature:
    nominal = model.system
    pert = model.realize(model.gamma_R.padded(model.D_R) - delta_R,
                         np.vstack([g.padded(model.D_O) for g in model.gamma_O]) - delta_O)
    dA = np.array(nominal.A) - np.array(pert.A)
    dB = np.array(nominal.B) - np.array(pert.B)
    allowed = set(range(model.n_S)) | {model.ctrl_row}
    rows = np.nonzero(np.any(np.hstack([dA, dB]) != 0, axis=1))[0]
    stray = [int(r) for r in rows if r not in allowed]
    if stray:
        raise InconsistencyError(f"signature has entries outside network rows: {stray}")
    return FailureSignature(dA, dB, span(np.hstack([dA, dB]), tol), delta_R, delta_O)


def failure_signature(model: MCN, f, tol: ToleranceConfig = DEFAULT_TOL) -> FailureSignature:
    """Perturbation ``(A - A^f, B - B^f)`` of link set ``f`` plus its image."""
    gR, gO = faulty_gammas(model, f)
    delta_R = model.gamma_R.padded(model.D_R) - gR
    delta_O = np.vstack([g.padded(model.D_O) for g in model.gamma_O]) - gO
    return _signature_from_deltas(model, delta_R, delta_O, tol)


@dataclass(eq=False)
class FailureClass:
    index: int
    representative: frozenset
    members: list[frozenset]
    signature: FailureSignature
    in_sigma: bool = False

    @property
    def is_empty(self) -> bool:
        return len(self.representative) == 0

    @property
    def label(self) -> str:
        if not self.representative:
            return "{}"
        return "{" + ", ".join(f"{t}:({u},{v})" for t, u, v in sorted(self.representative)) + "}"


@dataclass(eq=False)
class FailureClassSet:
    universe: list[TaggedEdge]
    omega: list[FailureClass]
    exhaustive: bool
    max_cardinality: int

    @property
    def sigma(self) -> list[FailureClass]:
        return [c for c in self.omega if c.in_sigma]

    @property
    def phi(self) -> list[FailureClass]:
        return [c for c in self.omega if not c.in_sigma]

    @property
    def phi_nonempty(self) -> list[FailureClass]:
        return [c for c in self.phi if not c.is_empty]

    def class_of(self, edges: Iterable) -> FailureClass:
        key = frozenset(tuple(e) for e in edges)
        for c in self.omega:
            if key in c.members:
                return c
        raise KeyError(f"link set {sorted(key)} was not enumerated")


class _PathTable:
    """Paths of both graphs as bitmasks over the edge universe, so the
    signature of any link subset is a masked sum."""

    def __init__(self, model: MCN, universe: Sequence[TaggedEdge]):
        self.model = model
        index = {e: i for i, e in enumerate(universe)}
        self.rows: list[tuple[int, int, float, int]] = []  # (channel, mask, weight, d)
        channels = [(CTRL, model.g_R, model.g_R.sinks[0])]
        channels += [(OBS, model.g_O, s) for s in model.g_O.sinks]
        for ch, (tag, g, sink) in enumerate(channels):
            for p in enumerate_path_delays(g, sink):
                mask = 0
                for e in p.path:
                    i = index.get((tag, e.src, e.dst))
                    if i is not None:
                        mask |= 1 << i
                self.rows.append((ch, mask, float(p.weight), p.delay))

    def deltas(self, fmask: int) -> tuple[np.ndarray, np.ndarray]:
        m = self.model
        dR = np.zeros(m.D_R)
        dO = np.zeros((m.n_S, m.D_O))
        for ch, mask, w, d in self.rows:
            if mask & fmask:
                if ch == 0:
                    dR[d - 1] += w
                else:
                    dO[ch - 1, d - 1] += w
        return dR, dO


def default_scope(model: MCN) -> tuple[str, ...]:
    """Graphs whose links are considered failure-prone.

    Failures are studied on the multi-hop graphs; a single-hop controllability
    link is taken as reliable. When both graphs are single hop the
    observability link is the failure-prone one.
    """
    return {
        "GRmultiGOsingle": (CTRL,),
        "GRsingleGOmulti": (OBS,),
        "BothMulti": (CTRL, OBS),
        "BothSingle": (OBS,),
    }[model.case()]


def _resolve_scope(model: MCN, scope) -> tuple[str, ...]:
    if scope in (None, "auto"):
        return default_scope(model)
    if scope == "all":
        return (CTRL, OBS)
    tags = tuple(scope) if not isinstance(scope, str) else tuple(scope.split(","))
    for t in tags:
        model.graph(t)
    return tags


def enumerate_failure_classes(model: MCN, max_cardinality: int | None = None,
                              scope=None, tol: ToleranceConfig = DEFAULT_TOL,
                              sig_tol: float = SIGNATURE_TOL,
                              exhaustive_limit: int = DEFAULT_EXHAUSTIVE_LIMIT,
                              sum_budget: int = DEFAULT_SUM_BUDGET) -> FailureClassSet:
    """Group link subsets by signature and split the classes into sums and
    the rest.

    With ``max_cardinality=None`` every subset of the failure-prone links is
    enumerated, which requires at most ``exhaustive_limit`` links.
    """
    universe = model.edge_universe(_resolve_scope(model, scope))
    E = len(universe)
    exhaustive = max_cardinality is None or max_cardinality >= E
    if exhaustive:
        if E > exhaustive_limit:
            raise EnumerationBudgetError(
                f"{E} failure-prone links exceed the exhaustive limit of {exhaustive_limit};"
                " pass a maximum cardinality")
        kmax = E
    else:
        kmax = max_cardinality
        total = sum(comb(E, k) for k in range(kmax + 1))
        if total > 2 ** exhaustive_limit:
            raise EnumerationBudgetError(f"{total} link subsets exceed the budget")

    table = _PathTable(model, universe)
    buckets: dict[tuple, list] = {}
    order: list[tuple] = []
    for k in range(kmax + 1):
        for combo in itertools.combinations(range(E), k):
            fmask = 0
            for i in combo:
                fmask |= 1 << i
            dR, dO = table.deltas(fmask)
            vec = np.concatenate([dR, dO.ravel()])
            key = tuple(np.round(vec / sig_tol).astype(np.int64).tolist())
            members = frozenset(universe[i] for i in combo)
            if key not in buckets:
                buckets[key] = [members, [], dR, dO]
                order.append(key)
            buckets[key][1].append(members)

    omega = []
    for idx, key in enumerate(order):
        rep, members, dR, dO = buckets[key]
        sig = _signature_from_deltas(model, dR, dO, tol)
        omega.append(FailureClass(idx, rep, members, sig))
    _mark_sums(omega, sig_tol, sum_budget)
    return FailureClassSet(universe, omega, exhaustive, kmax)


def _mark_sums(omega: list[FailureClass], tol: float, budget: int) -> None:
    vecs = [c.signature.vector for c in omega]
    nonzero = [i for i, v in enumerate(vecs) if np.any(np.abs(v) > tol)]
    counter = [0]

    def reachable(target: np.ndarray, cands: list[int]) -> bool:
        if not cands:
            return False
        suffix = [None] * (len(cands) + 1)
        suffix[-1] = np.zeros_like(target)
        for j in range(len(cands) - 1, -1, -1):
            suffix[j] = suffix[j + 1] + vecs[cands[j]]

        def dfs(j: int, resid: np.ndarray, used: int) -> bool:
            counter[0] += 1
            if counter[0] > budget:
                raise EnumerationBudgetError("subset-sum search exceeded its budget")
            if used >= 2 and np.all(np.abs(resid) <= tol * used):
                return True
            if j == len(cands):
                return False
            if np.any(suffix[j] < resid - tol * (used + 1)):
                return False
            nxt = resid - vecs[cands[j]]
            if np.all(nxt >= -tol * (used + 1)) and dfs(j + 1, nxt, used + 1):
                return True
            return dfs(j + 1, resid, used)

        return dfs(0, target, 0)

    for i in nonzero:
        target = vecs[i]
        cands = [j for j in nonzero
                 if j != i and np.all(vecs[j] <= target + tol)]
        cands.sort(key=lambda j: -float(np.sum(vecs[j])))
        omega[i].in_sigma = reachable(target, cands)


@dataclass(eq=False)
class DetectabilityReport:
    case: str
    scope: tuple[str, ...]
    classes: FailureClassSet
    verdicts: dict[int, bool]
    tree: TreeDiagnosis
    tree_trimmed: bool
    n_S: int
    n_phi: int
    d_L_phi: int
    L_phi_is_output_space: bool
    prediction: str
    anomalies: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    recommendation: str = ""

    @property
    def all_solvable(self) -> bool:
        return all(self.verdicts.values())


def classify_detectability(model: MCN, scope=None, max_cardinality: int | None = None,
                           tol: ToleranceConfig = DEFAULT_TOL, strict: bool = True,
                           classes: FailureClassSet | None = None) -> DetectabilityReport:
    """Decide residual-generator existence for every class and cross-check the
    verdicts against the structural characterizations of each case.

    Structural/algebraic disagreements are collected in ``anomalies``; with
    ``strict`` they raise :class:`InconsistencyError`. The single-hop-output
    case only annotates, since its sufficiency direction needs the
    controllability-network state to be observable.
    """
    case = model.case()
    if classes is None:
        classes = enumerate_failure_classes(model, max_cardinality, scope, tol)
    sys = model.system
    A, C = np.array(sys.A), np.array(sys.C)
    phi = classes.phi_nonempty
    images = [c.signature.image for c in phi]
    verdicts = dict(zip((c.index for c in phi), efprg_check(A, C, images, tol)))
    n = sys.n
    L_phi = sum_(*images, tol=tol) if images else Subspace(n)
    n_phi = sum(s.dim for s in images)
    d_L = L_phi.dim
    out_space = orth_complement(kernel(C, tol), tol)
    tree = is_scheduling_tree(model.g_O)
    tree_trim = is_scheduling_tree(trimmed(model.g_O)).is_tree
    all_ok = all(verdicts.values())
    anomalies: list[str] = []
    notes: list[str] = []
    size_phi = len(classes.phi)

    if tree.is_tree != tree_trim:
        notes.append("observability graph has scheduled links on no sensor-to-terminal "
                     "path; they never affect measurements and were ignored")
    if case == "GRmultiGOsingle":
        prediction = f"solvable iff |Phi| <= 2 (|Phi| = {size_phi})"
        expected = size_phi <= 2
        wrong = [classes.omega[i].label for i, v in verdicts.items() if v != expected]
        if wrong:
            notes.append("algebraic verdict differs from the |Phi| <= 2 rule for "
                         + ", ".join(wrong) + " (check observability of the network state)")
    elif case == "GRsingleGOmulti":
        prediction = ("all classes solvable iff the scheduled observability graph is a "
                      f"tree (tree: {tree_trim}; d(L_Phi) = {d_L}, n_Phi = {n_phi})")
        if not (all_ok == tree_trim == (d_L == n_phi)):
            anomalies.append(
                f"solvable={all_ok}, tree={tree_trim}, d(L_Phi)=n_Phi={d_L == n_phi} disagree")
        if all_ok and phi:
            if model.n_S != n_phi:
                anomalies.append(f"all classes solvable but n_S={model.n_S} != n_Phi={n_phi}")
            if not L_phi.equals(out_space, tol):
                anomalies.append("all classes solvable but L_Phi differs from ker(C)^perp")
    elif case == "BothMulti":
        prediction = "no class solvable when both graphs are multi-hop"
        ok = [classes.omega[i].label for i, v in verdicts.items() if v]
        if ok:
            anomalies.append("classes reported solvable with both graphs multi-hop: "
                             + ", ".join(ok))
    else:
        prediction = "no structural characterization for two single-hop links"

    rec = []
    if not model.g_R.is_single_hop():
        rec.append("Links of the multi-hop controllability graph cannot be isolated from "
                   "the measured outputs alone; detect them inside that network by "
                   "link-level acknowledgements (handshaking) reported to the controller.")
    if OBS in classes_scope(classes) and not tree_trim:
        rec.append("Reschedule or rewire the observability graph into a tree rooted at the "
                   "sensor with the terminating nodes as leaves, or keep one memory slot "
                   "per incoming link at merging nodes.")
    if all_ok and phi:
        rec.append("Every failure class admits a residual generator.")

    report = DetectabilityReport(
        case=case, scope=tuple(sorted({t for t, _, _ in classes.universe})),
        classes=classes, verdicts=verdicts, tree=tree, tree_trimmed=tree_trim,
        n_S=model.n_S, n_phi=n_phi, d_L_phi=d_L,
        L_phi_is_output_space=L_phi.equals(out_space, tol),
        prediction=prediction, anomalies=anomalies, notes=notes,
        recommendation=" ".join(rec))
    if strict and anomalies:
        raise InconsistencyError("; ".join(anomalies))
    return report


def classes_scope(classes: FailureClassSet) -> set[str]:
    return {t for t, _, _ in classes.universe}
