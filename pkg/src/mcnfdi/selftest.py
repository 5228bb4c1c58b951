"""Randomized oracle checks runnable from the command line.

Each check returns a :class:`CheckResult`; ``run_selftest`` runs them all.
Sizes default to a quick pass; ``scale`` multiplies the instance counts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import MCNError
from .fdi import FailureConfig, classify_detectability, enumerate_failure_classes
from .flow import gamma_by_simulation, gamma_coefficients
from .graph import design_observability_tree, is_scheduling_tree
from .io import load_fixture
from .lti import observability_matrix
from .model import MCN
from .randgen import random_dag, random_mcn, random_plant, single_hop
from .residuals import synthesize_residual_bank
from .simulator import (RandomInput, Scenario, simulate_scenario, state_space_response,
                        verify_injection_equivalence)
from .subspace import DEFAULT_TOL, caisa, full, kernel, orth_complement, span, uosa


@dataclass
class CheckResult:
    name: str
    passed: bool
    instances: int
    detail: str
    seconds: float = 0.0


def _timed(fn):
    def wrapper(*a, **kw):
        t = time.perf_counter()
        r = fn(*a, **kw)
        r.seconds = time.perf_counter() - t
        return r
    wrapper.__name__ = fn.__name__
    return wrapper


def _pad(a, b):
    D = max(len(a), len(b))
    return list(a) + [0.0] * (D - len(a)), list(b) + [0.0] * (D - len(b))


@_timed
def check_gamma_oracle(rng, count=50) -> CheckResult:
    worst = 0.0
    for _ in range(count):
        g = random_dag(rng, n_sinks=int(rng.integers(1, 3)))
        for s in g.sinks:
            a, b = _pad(gamma_coefficients(g, s), gamma_by_simulation(g, s))
            worst = max(worst, max((abs(x - y) for x, y in zip(a, b)), default=0.0))
    return CheckResult("gamma_oracle", worst < 1e-12, count, f"max deviation {worst:.3e}")


@_timed
def check_state_space_fidelity(rng, count=10, frames=40) -> CheckResult:
    worst = 0.0
    for i in range(count):
        m = random_mcn(rng, ("GRmultiGOsingle", "GRsingleGOmulti", "BothMulti")[i % 3])
        tr = simulate_scenario(m, Scenario(frames, RandomInput(), seed=int(rng.integers(1 << 30))))
        _, y = state_space_response(m, tr.u)
        worst = max(worst, float(np.max(np.abs(tr.y - y))))
    return CheckResult("state_space_fidelity", worst < 1e-9, count, f"max deviation {worst:.3e}")


@_timed
def check_invariant_subspaces(rng, count=20) -> CheckResult:
    bad = 0
    tol = DEFAULT_TOL
    for _ in range(count):
        n = int(rng.integers(2, 9))
        p = int(rng.integers(1, n))
        A = rng.standard_normal((n, n))
        C = rng.standard_normal((p, n))
        out = orth_complement(kernel(C, tol), tol)
        k = int(rng.integers(0, out.dim + 1))
        L = span(out.basis @ rng.standard_normal((out.dim, k)), tol, ambient=n)
        W = caisa(A, C, L, tol)
        S = uosa(A, C, L, tol)
        extra = L.residual(S.basis)  # part of S* outside L must lie in ker C
        ok = W.equals(L, tol) and np.linalg.norm(C @ extra) < 1e-8 * max(1, np.linalg.norm(C))
        ok = ok and uosa(A, C, out, tol).equals(full(n), tol)
        bad += not ok
    return CheckResult("invariant_subspaces", bad == 0, count, f"{bad} failures")


def _rule_run(rng, case, count, judge, tree_cycle=False) -> tuple[int, int]:
    bad = done = 0
    for i in range(count):
        m = random_mcn(rng, case, tree=(i % 2 == 0) if tree_cycle else None)
        r = classify_detectability(m, strict=False)
        ok = judge(m, r, i)
        if ok is None:
            continue
        done += 1
        bad += not ok
    return bad, done


@_timed
def check_single_output_rule(rng, count=20) -> CheckResult:
    def judge(m, r, i):
        if np.linalg.matrix_rank(observability_matrix(m.system.A, m.system.C)) < m.n:
            return None
        expect = len(r.classes.phi) <= 2
        return all(v == expect for v in r.verdicts.values())
    bad, done = _rule_run(rng, "GRmultiGOsingle", count, judge)
    return CheckResult("single_output_rule", bad == 0, done, f"{bad} disagreements")


@_timed
def check_tree_rule(rng, count=20) -> CheckResult:
    span_bad = [0]

    def judge(m, r, i):
        tree = is_scheduling_tree(m.g_O).is_tree
        ok = r.all_solvable == tree == (r.d_L_phi == r.n_phi)
        if tree and not (r.n_S == r.n_phi and r.L_phi_is_output_space):
            span_bad[0] += 1
        return ok
    bad, done = _rule_run(rng, "GRsingleGOmulti", count, judge, tree_cycle=True)
    return CheckResult("tree_rule", bad == 0 and span_bad[0] == 0, done,
                       f"{bad} disagreements, {span_bad[0]} output-space mismatches")


@_timed
def check_both_multi_rule(rng, count=20) -> CheckResult:
    bad, done = _rule_run(rng, "BothMulti", count,
                             lambda m, r, i: not any(r.verdicts.values()))
    return CheckResult("both_multi_rule", bad == 0, done, f"{bad} instances with a solvable class")


@_timed
def check_injection_equivalence(rng, frames=50) -> CheckResult:
    worst = 0.0
    count = 0
    for name in ("chain", "diamond", "tree2", "tree3"):
        m = load_fixture(name)
        for c in enumerate_failure_classes(m).omega:
            for f in c.members:
                worst = max(worst, verify_injection_equivalence(m, f, frames,
                                                                seed=int(rng.integers(1 << 30))))
                count += 1
    return CheckResult("injection_equivalence", worst < 1e-9, count, f"max deviation {worst:.3e}")


@_timed
def check_detection(rng, quiet_frames=1000) -> CheckResult:
    m = load_fixture("tree3")
    bank = synthesize_residual_bank(m)
    seed = int(rng.integers(1 << 30))
    tr = simulate_scenario(m, Scenario(quiet_frames, RandomInput(), seed=seed), bank=bank)
    fp = sum(1 for d in tr.detected if d)
    problems = [f"{fp} false-positive frames"] if fp else []
    deadline = 10 + m.D_O + 3
    branches = [e for e in m.edge_universe(("O",)) if e[1] == m.g_O.source]
    for e in branches:
        label = "{" + f"{e[0]}:({e[1]},{e[2]})" + "}"
        tr = simulate_scenario(m, Scenario(deadline + 5, RandomInput(),
                                           ((10, FailureConfig({e})),), seed=seed), bank=bank)
        if label not in tr.detected[deadline] or len(tr.detected[deadline]) != 1:
            problems.append(f"{label} not isolated by frame {deadline}")
    both = FailureConfig(set(branches[:2]))
    tr = simulate_scenario(m, Scenario(deadline + 5, RandomInput(), ((10, both),), seed=seed),
                           bank=bank)
    if len(tr.detected[deadline]) != 2:
        problems.append("simultaneous failure not fully detected")
    return CheckResult("detection", not problems, 1 + len(branches) + 1,
                       "; ".join(problems) or "all injections isolated")


@_timed
def check_designer(rng, count=10) -> CheckResult:
    problems = 0
    for _ in range(count):
        n_S = int(rng.integers(1, 5))
        delays = [int(d) for d in rng.integers(1, 4, size=n_S)]
        depth = max(delays) + int(rng.integers(0, 2))
        g_O = design_observability_tree(n_S, delays, depth)
        if g_O.is_single_hop():
            continue
        m = MCN(random_plant(rng), single_hop("v_c", "v_u", depth), g_O, 0.05)
        r = classify_detectability(m)
        gam_ok = all(
            gamma_coefficients(g_O, s) == [0.0] * (d - 1) + [1.0]
            for s, d in zip(g_O.sinks, delays))
        problems += not (r.all_solvable and gam_ok)
    return CheckResult("designer", problems == 0, count, f"{problems} failures")


CHECKS = (check_gamma_oracle, check_state_space_fidelity, check_invariant_subspaces,
          check_single_output_rule, check_tree_rule, check_both_multi_rule,
          check_injection_equivalence, check_detection, check_designer)

_DEFAULT_COUNTS = {"check_gamma_oracle": 50, "check_state_space_fidelity": 10,
                   "check_invariant_subspaces": 20, "check_single_output_rule": 20,
                   "check_tree_rule": 20, "check_both_multi_rule": 20, "check_designer": 10}


def run_selftest(seed: int = 0, scale: float = 1.0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for fn in CHECKS:
        try:
            if fn.__name__ in _DEFAULT_COUNTS:
                count = max(1, int(round(_DEFAULT_COUNTS[fn.__name__] * scale)))
                out.append(fn(rng, count=count))
            else:
                out.append(fn(rng))
        except MCNError as exc:
            out.append(CheckResult(fn.__name__[6:], False, 0, f"{type(exc).__name__}: {exc}"))
    return out
