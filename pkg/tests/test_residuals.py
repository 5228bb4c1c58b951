import numpy as np
import pytest

from mcnfdi.errors import ModelError
from mcnfdi.fdi import FailureConfig
from mcnfdi.residuals import (
    DetectorConfig,
    deadbeat_feedback,
    deadbeat_observer_gain,
    run_detector,
    synthesize_residual_bank,
)
from mcnfdi.simulator import RandomInput, Scenario, simulate_scenario


def branch(i):
    return ("O", "v_y", f"b{i}_1")


def label(i):
    return "{O:(v_y,b%d_1)}" % i


class TestDeadbeat:
    def test_feedback_nilpotent(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 3))
            A = rng.standard_normal((n, n))
            B = rng.standard_normal((n, m))
            F = deadbeat_feedback(A, B)
            M = np.linalg.matrix_power(A + B @ F, n)
            assert np.linalg.norm(M) < 1e-8 * max(1.0, np.linalg.norm(A + B @ F)) ** n

    def test_uncontrollable(self):
        with pytest.raises(ModelError):
            deadbeat_feedback(np.diag([1.0, 2.0]), np.array([[1.0], [0.0]]))

    def test_observer_gain_partial_observability(self):
        A = np.diag([0.5, 0.3, 0.2])
        A[0, 1] = 1.0
        C = np.array([[1.0, 0.0, 0.0]])
        K, n_o = deadbeat_observer_gain(A, C)
        assert n_o == 2
        # output error dies after n_o steps for any initial error
        E = A - K @ C
        assert np.linalg.norm(C @ np.linalg.matrix_power(E, n_o)) < 1e-10


class TestBank:
    def test_tree_fixture_quiet(self, tree2):
        bank = synthesize_residual_bank(tree2)
        tr = simulate_scenario(tree2, Scenario(30, RandomInput(), seed=4))
        r = bank.residuals(tr.u, tr.y)
        assert np.max(np.abs(r[tree2.n:])) < 1e-9

    def test_branch_isolation(self, tree2):
        bank = synthesize_residual_bank(tree2)
        tr = simulate_scenario(tree2, Scenario(30, RandomInput(), ((10, FailureConfig({branch(1)})),),
                                                seed=4))
        r = bank.residuals(tr.u, tr.y)
        j1, j2 = bank.labels.index(label(1)), bank.labels.index(label(2))
        assert np.max(np.abs(r[10:10 + tree2.D_O + 2, j1])) > 1e-6
        assert np.max(np.abs(r[tree2.n:, j2])) < 1e-9

    def test_zero_gain_is_open_loop_error(self, tree2):
        bank = synthesize_residual_bank(tree2, gain="zero")
        u = np.random.default_rng(1).standard_normal(25)
        y = np.random.default_rng(2).standard_normal((25, 2))
        _, y_model = tree2.system.simulate(u)
        r = bank.residuals(u, y)
        for j, g in enumerate(bank.generators):
            assert np.allclose(r[:, j], (y - y_model) @ g.w, atol=1e-12)

    def test_unsolvable_precondition(self, diamond):
        with pytest.raises(ModelError, match="not isolable"):
            synthesize_residual_bank(diamond)

    def test_unknown_gain(self, tree2):
        with pytest.raises(ModelError):
            synthesize_residual_bank(tree2, gain="lqr")


class TestDetector:
    def test_quiet_trace(self, tree2):
        bank = synthesize_residual_bank(tree2)
        tr = simulate_scenario(tree2, Scenario(60, RandomInput(), seed=7))
        assert all(not d for d in run_detector(bank, tr.u, tr.y))

    def test_branch_failure(self, tree3):
        bank = synthesize_residual_bank(tree3)
        tr = simulate_scenario(tree3, Scenario(30, RandomInput(), ((10, FailureConfig({branch(1)})),),
                                                seed=7))
        det = run_detector(bank, tr.u, tr.y)
        first = next(k for k, d in enumerate(det) if d)
        assert first <= 10 + tree3.D_O + 3
        assert det[first] == {label(1)}

    def test_simultaneous(self, tree3):
        bank = synthesize_residual_bank(tree3)
        f = FailureConfig({branch(1), branch(2)})
        tr = simulate_scenario(tree3, Scenario(30, RandomInput(), ((10, f),), seed=7))
        det = run_detector(bank, tr.u, tr.y)
        assert det[10 + tree3.D_O + 3] == {label(1), label(2)}

    def test_persistence_and_transient(self, tree2):
        # open-loop predictor with zero input: residuals are the raw outputs
        bank = synthesize_residual_bank(tree2, gain="zero")
        u = np.zeros(20)
        y = np.zeros((20, 2))
        y[12, 0] = 1.0  # a single spike is not persistent
        assert all(not d for d in run_detector(bank, u, y))
        y[12:15, 0] = 1.0
        det = run_detector(bank, u, y, DetectorConfig(1e-6, 3))
        assert label(1) in det[14] and not det[13]
        y = np.ones((20, 2))
        det = run_detector(bank, u, y)
        assert all(not d for d in det[:bank.transient])

    def test_short_trace(self, tree2):
        bank = synthesize_residual_bank(tree2)
        with pytest.raises(ModelError):
            run_detector(bank, np.zeros(3), np.zeros((3, 2)))

    def test_config(self):
        with pytest.raises(ModelError):
            DetectorConfig(0.0, 3)
        with pytest.raises(ModelError):
            DetectorConfig(1e-6, 0)
