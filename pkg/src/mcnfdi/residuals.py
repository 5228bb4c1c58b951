"""Residual-generator bank and the thresholded detector.

Each failure class gets its own full-order deadbeat observer driven only by
the output directions that the *other* classes cannot reach. In the tree case
those are single output coordinates, and because terminating-node states feed
nothing else, a failure of one branch never leaks into another branch's
residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ModelError, NumericalError
from .fdi import DetectabilityReport, FailureClassSet, classify_detectability
from .model import MCN
from .subspace import (
    DEFAULT_TOL,
    Subspace,
    ToleranceConfig,
    orth_complement,
    span,
    sum_,
    unobservable_subspace,
)

DEFAULT_THRESHOLD = 1e-6
DEFAULT_PERSISTENCE = 3


def deadbeat_feedback(A: np.ndarray, B: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """State feedback ``F`` with ``A + B F`` nilpotent, for controllable (A, B).

    Builds the chain basis ``b_i, A b_i, ...`` in Luenberger search order; in
    the coordinates given by the last row of each chain block of its inverse,
    the closed loop is a set of pure shift chains.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    n, m = B.shape
    if n == 0:
        return np.zeros((m, 0))
    chains: list[list[np.ndarray]] = [[] for _ in range(m)]
    alive = [True] * m
    ortho = np.zeros((n, 0))
    for j in range(n):
        for i in range(m):
            if not alive[i]:
                continue
            v = B[:, i] if j == 0 else A @ chains[i][-1]
            res = v - ortho @ (ortho.T @ v)
            res = res - ortho @ (ortho.T @ res)
            nr = np.linalg.norm(res)
            if nr > tol * max(1.0, np.linalg.norm(v)) and ortho.shape[1] < n:
                chains[i].append(v)
                ortho = np.hstack([ortho, (res / nr)[:, None]])
            else:
                alive[i] = False
        if ortho.shape[1] == n:
            break
    if ortho.shape[1] < n:
        raise ModelError("pair is not controllable; deadbeat gain undefined")
    active = [i for i in range(m) if chains[i]]
    Q = np.hstack([np.column_stack(chains[i]) for i in active])
    Qinv = np.linalg.inv(Q)
    ends = np.cumsum([len(chains[i]) for i in active]) - 1
    M = np.zeros((len(active), n))
    Gam = np.zeros((len(active), len(active)))
    for r, (i, e) in enumerate(zip(active, ends)):
        q = Qinv[e]
        mu = len(chains[i])
        qA = q @ np.linalg.matrix_power(A, mu - 1)
        M[r] = qA @ A
        Gam[r] = qA @ B[:, active]
    F = np.zeros((m, n))
    F[active] = -np.linalg.solve(Gam, M)
    return F


def deadbeat_observer_gain(A: np.ndarray, C: np.ndarray,
                           tol: ToleranceConfig = DEFAULT_TOL) -> tuple[np.ndarray, int]:
    """Gain ``K`` making ``A - K C`` nilpotent on the observable part.

    Returns ``(K, n_o)`` with ``n_o`` the observable dimension; the output error
    of the observer vanishes after at most ``n_o`` steps.
    """
    A = np.asarray(A, float)
    C = np.atleast_2d(np.asarray(C, float))
    n = A.shape[0]
    N = unobservable_subspace(A, C, tol)
    Vo = orth_complement(N, tol).basis
    n_o = Vo.shape[1]
    if n_o == 0:
        return np.zeros((n, C.shape[0])), 0
    A_oo = Vo.T @ A @ Vo
    C_o = C @ Vo
    F = deadbeat_feedback(A_oo.T, C_o.T)
    K_o = -F.T
    closed = A_oo - K_o @ C_o
    P = np.linalg.matrix_power(closed, n_o)
    if np.linalg.norm(P, 2) > 1e-8 * max(1.0, np.linalg.norm(closed, 2)) ** n_o:
        raise NumericalError("deadbeat observer is not nilpotent to tolerance")
    return Vo @ K_o, n_o


@dataclass(eq=False)
class ResidualGenerator:
    label: str
    class_index: int
    K: np.ndarray       # n x q
    Q: np.ndarray       # q x n_S, orthonormal rows: output directions used
    w: np.ndarray       # n_S, unit residual direction
    n_observable: int


@dataclass(eq=False)
class ResidualBank:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    generators: list[ResidualGenerator]
    transient: int

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.generators]

    def residuals(self, u: Sequence[float], y: np.ndarray) -> np.ndarray:
        """Residual matrix, one row per frame and one column per generator."""
        u = np.asarray(u, float).reshape(-1)
        y = np.atleast_2d(np.asarray(y, float))
        if y.shape[0] != u.size:
            raise ModelError("u and y must have one entry per frame")
        K = u.size
        n = self.A.shape[0]
        r = np.zeros((K, len(self.generators)))
        for j, g in enumerate(self.generators):
            xh = np.zeros(n)
            for k in range(K):
                innov = y[k] - self.C @ xh
                r[k, j] = g.w @ innov
                xh = self.A @ xh + self.B[:, 0] * u[k] + g.K @ (g.Q @ innov)
        return r


def synthesize_residual_bank(model: MCN, classes: FailureClassSet | None = None,
                             report: DetectabilityReport | None = None,
                             tol: ToleranceConfig = DEFAULT_TOL,
                             gain: str = "deadbeat") -> ResidualBank:
    """One observer-based residual generator per nonempty isolable class.

    ``gain="zero"`` builds open-loop predictors (K = 0), useful as a sanity
    reference for stable networks.
    """
    if report is None:
        report = classify_detectability(model, tol=tol, classes=classes)
    classes = report.classes
    phi = classes.phi_nonempty
    bad = [c.label for c in phi if not report.verdicts[c.index]]
    if bad:
        reason = ("observability graph is not a tree" if not report.tree_trimmed
                  else "failure classes are not isolable for this network case")
        raise ModelError(f"no residual generator for {', '.join(bad)}: {reason} "
                         f"(case {report.case})")
    sys = model.system
    A, B, C = np.array(sys.A), np.array(sys.B), np.array(sys.C)
    p = C.shape[0]
    gens = []
    for c in phi:
        others = [o.signature.image for o in phi if o is not c]
        Lbar = sum_(*others, tol=tol) if others else Subspace(sys.n)
        blocked = span(C @ Lbar.basis, tol, ambient=p)
        Q = orth_complement(blocked, tol).basis.T
        direction = span(C @ c.signature.image.basis, tol, ambient=p)
        if direction.is_zero():
            raise ModelError(f"class {c.label} does not reach the outputs")
        w = Q.T @ (Q @ direction.basis[:, 0])
        nw = np.linalg.norm(w)
        if nw < tol.eq_tol:
            raise ModelError(f"class {c.label} is hidden by the other classes")
        w = w / nw
        if gain == "zero":
            K, n_o = np.zeros((sys.n, Q.shape[0])), sys.n
        elif gain == "deadbeat":
            K, n_o = deadbeat_observer_gain(A, Q @ C, tol)
        else:
            raise ModelError(f"unknown gain design {gain!r}")
        gens.append(ResidualGenerator(c.label, c.index, K, Q, w, n_o))
    return ResidualBank(A, B, C, gens, transient=sys.n)


@dataclass(frozen=True)
class DetectorConfig:
    threshold: float = DEFAULT_THRESHOLD
    persistence: int = DEFAULT_PERSISTENCE

    def __post_init__(self):
        if not self.threshold > 0 or self.persistence < 1:
            raise ModelError("threshold must be > 0 and persistence >= 1")


def run_detector(bank: ResidualBank, u, y, config: DetectorConfig = DetectorConfig(),
                 residuals: np.ndarray | None = None) -> list[set[str]]:
    """Per-frame set of classes whose residual exceeded the threshold on each
    of the last ``persistence`` frames. Frames inside the observer transient
    report nothing."""
    r = bank.residuals(u, y) if residuals is None else residuals
    K = r.shape[0]
    if K <= bank.transient:
        raise ModelError(f"trace of {K} frames is shorter than the {bank.transient}-frame transient")
    above = np.abs(r) > config.threshold
    out: list[set[str]] = []
    w = config.persistence
    for k in range(K):
        active = set()
        if k >= bank.transient:
            lo = max(bank.transient, k - w + 1)
            if k - lo + 1 >= w:
                for j, g in enumerate(bank.generators):
                    if above[lo:k + 1, j].all():
                        active.add(g.label)
        out.append(active)
    return out
