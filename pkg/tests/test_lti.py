import math

import numpy as np
import pytest

from mcnfdi.errors import ModelError
from mcnfdi.lti import (
    ContinuousLTI,
    DiscreteLTI,
    FIRTransfer,
    assemble_mcn,
    discretize_plant,
    expm,
    realize_controllability,
    realize_observability,
)


def taylor_expm(M, t, terms=30):
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, terms):
        term = term @ (M * t) / k
        out = out + term
    return out


def simpson_input_matrix(A, B, T, panels=200):
    s = np.linspace(0.0, T, 2 * panels + 1)
    h = s[1] - s[0]
    vals = [taylor_expm(A, si, 40) @ B for si in s]
    acc = vals[0] + vals[-1]
    acc = acc + 4 * sum(vals[1:-1:2]) + 2 * sum(vals[2:-1:2])
    return acc * h / 3


def impulse_response(A, B, C, K):
    x = B[:, 0].copy()
    out = [0.0]
    for _ in range(K - 1):
        out.append(float((C @ x)[0]))
        x = A @ x
    return np.array(out)


class TestExpm:
    def test_zero_matrix_gives_identity(self):
        assert np.allclose(expm(np.zeros((2, 2)), 1.0), np.eye(2), atol=0)

    def test_nilpotent(self):
        assert np.allclose(expm(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0), [[1, 1], [0, 1]],
                           atol=1e-15)

    def test_matches_taylor_series(self, rng):
        A = rng.standard_normal((4, 4))
        assert np.max(np.abs(expm(A, 0.3) - taylor_expm(A, 0.3))) < 1e-10

    def test_relative_accuracy_moderate_norm(self, rng):
        for _ in range(5):
            A = rng.standard_normal((4, 4))
            t = 2.0 / np.linalg.norm(A, 2)
            ref = taylor_expm(A, t, 60)
            assert np.linalg.norm(expm(A, t) - ref) <= 1e-12 * np.linalg.norm(ref)

    def test_rejects_non_square(self):
        with pytest.raises(ModelError):
            expm(np.zeros((2, 3)), 1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ModelError):
            expm(np.array([[np.nan]]), 1.0)
        with pytest.raises(ModelError):
            expm(np.eye(2), math.inf)


class TestDiscretize:
    def test_integrator(self):
        p = ContinuousLTI(np.array([[0.0]]), np.array([[1.0]]), np.array([[1.0]]))
        d = discretize_plant(p, 1.0)
        assert np.allclose([d.A[0, 0], d.B[0, 0], d.C[0, 0]], [1, 1, 1])

    def test_scalar_closed_form(self):
        p = ContinuousLTI(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]))
        d = discretize_plant(p, math.log(2))
        assert d.A[0, 0] == pytest.approx(0.5, abs=1e-14)
        assert d.B[0, 0] == pytest.approx(0.5, abs=1e-14)

    def test_input_matrix_matches_quadrature(self, rng):
        A = rng.standard_normal((3, 3))
        A -= (np.linalg.eigvals(A).real.max() + 0.5) * np.eye(3)
        B = rng.standard_normal((3, 1))
        C = rng.standard_normal((1, 3))
        d = discretize_plant(ContinuousLTI(A, B, C), 0.1)
        assert np.max(np.abs(d.B - simpson_input_matrix(A, B, 0.1))) < 1e-9

    def test_semigroup(self, rng):
        A = rng.standard_normal((3, 3)) - 2 * np.eye(3)
        p = ContinuousLTI(A, rng.standard_normal((3, 1)), rng.standard_normal((1, 3)))
        a1 = discretize_plant(p, 0.07).A
        a2 = discretize_plant(p, 0.11).A
        assert np.max(np.abs(discretize_plant(p, 0.18).A - a1 @ a2)) < 1e-9

    def test_rejects_nonpositive_period(self):
        p = ContinuousLTI(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]))
        with pytest.raises(ModelError):
            discretize_plant(p, 0.0)


class TestPlantValidation:
    def test_non_minimal_rejected(self):
        with pytest.raises(ModelError, match="controllable"):
            ContinuousLTI(np.diag([-1.0, -2.0]), np.array([[1.0], [0.0]]),
                          np.array([[1.0, 1.0]]))
        with pytest.raises(ModelError, match="observable"):
            ContinuousLTI(np.diag([-1.0, -2.0]), np.array([[1.0], [1.0]]),
                          np.array([[1.0, 0.0]]))

    def test_shape_checks(self):
        with pytest.raises(ModelError):
            ContinuousLTI(np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((1, 2)))
        with pytest.raises(ModelError):
            ContinuousLTI(-np.eye(2), np.ones((2, 2)), np.ones((1, 2)))

    def test_discrete_dimensions(self):
        with pytest.raises(ModelError):
            DiscreteLTI(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), 1.0)
        with pytest.raises(ModelError):
            DiscreteLTI(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), 0.0)


class TestFIR:
    def test_invariants(self):
        with pytest.raises(ModelError):
            FIRTransfer(())
        with pytest.raises(ModelError):
            FIRTransfer((1.0, -0.1, 1.0))
        with pytest.raises(ModelError):
            FIRTransfer((1.0, 0.0))
        assert FIRTransfer((0.0, 2.0)).D == 2

    def test_padding(self):
        assert FIRTransfer((1.0,)).padded(3).tolist() == [1.0, 0.0, 0.0]


class TestControllabilityRealization:
    def test_degenerate_single_delay(self):
        A, B, C = realize_controllability(FIRTransfer((1.0,)))
        assert A.tolist() == [[0.0]] and B.tolist() == [[1.0]] and C.tolist() == [[1.0]]

    def test_two_delays_layout(self):
        A, B, C = realize_controllability(FIRTransfer((0.5, 0.5)))
        assert A.tolist() == [[0.0, 0.5], [0.0, 0.0]]
        assert B.tolist() == [[0.5], [1.0]]
        assert C.tolist() == [[1.0, 0.0]]

    def test_transfer_expansion_two_delays(self):
        # C (zI - A)^-1 B = 0.5/z + 0.5/z^2, checked at a few points of the complex plane
        A, B, C = realize_controllability(FIRTransfer((0.5, 0.5)))
        for z in (2.0, -1.5, 0.3 + 1.1j):
            h = (C @ np.linalg.solve(z * np.eye(2) - A, B))[0, 0]
            assert h == pytest.approx(0.5 / z + 0.5 / z ** 2, abs=1e-13)

    def test_first_row_and_shift_block(self):
        A, B, C = realize_controllability(FIRTransfer((0.1, 0.2, 0.3, 0.4)))
        assert A[0].tolist() == [0.0, 0.4, 0.3, 0.2]
        assert np.array_equal(A[1:, 1:], np.eye(3, k=1)[:3, :3])
        assert np.array_equal(A[1:, 0], np.zeros(3))
        assert B[:, 0].tolist() == [0.1, 0.0, 0.0, 1.0]

    def test_impulse_response_random(self, rng):
        for _ in range(20):
            D = int(rng.integers(1, 7))
            g = rng.uniform(0, 2, D)
            g[-1] = max(g[-1], 0.1)
            g[rng.random(D) < 0.3] = 0.0
            g[-1] = 1.3
            A, B, C = realize_controllability(FIRTransfer(tuple(g)))
            h = impulse_response(A, B, C, D + 5)
            assert np.allclose(h, np.concatenate([[0.0], g, np.zeros(4)]), atol=1e-14)

    def test_markov_parameters(self, rng):
        g = (0.0, 0.7, 0.0, 1.9, 0.4)
        A, B, C = realize_controllability(FIRTransfer(g))
        for k in range(1, 10):
            mk = (C @ np.linalg.matrix_power(A, k - 1) @ B)[0, 0]
            assert mk == pytest.approx(g[k - 1] if k <= len(g) else 0.0, abs=1e-14)

    def test_padding_keeps_transfer(self):
        A, B, C = realize_controllability((0.5, 0.5), D=4)
        assert A.shape == (4, 4)
        assert np.allclose(impulse_response(A, B, C, 8), [0, 0.5, 0.5, 0, 0, 0, 0, 0])


class TestObservabilityRealization:
    def test_single_hop_collapse(self):
        A, B, C = realize_observability([FIRTransfer((1.0,))], 1, 1)
        assert A.tolist() == [[0.0]] and B.tolist() == [[1.0]] and C.tolist() == [[1.0]]

    def test_two_unit_leaves(self):
        A, B, C = realize_observability([(1.0,), (1.0,)], 1, 2)
        assert np.array_equal(A, np.zeros((2, 2)))
        assert B.tolist() == [[1.0], [1.0]]
        assert np.array_equal(C, np.eye(2))

    def test_two_leaves_different_delays(self):
        A, B, C = realize_observability([(1.0, 0.0), (0.0, 1.0)], 2, 2)
        assert A.shape == (3, 3)
        x = B[:, 0].copy()
        outs = []
        for _ in range(4):
            outs.append((C @ x).tolist())
            x = A @ x
        # frame 1 -> output 1, frame 2 -> output 2
        assert outs[0] == [1.0, 0.0]
        assert outs[1] == [0.0, 1.0]
        assert outs[2] == [0.0, 0.0]

    def test_sink_columns_zero_and_output_matrix(self, rng):
        G = rng.uniform(0.1, 1, (3, 4))
        A, B, C = realize_observability(list(G), 4, 3)
        assert A.shape == (6, 6)
        assert np.array_equal(A[:, :3], np.zeros((6, 3)))
        assert np.array_equal(C, np.hstack([np.eye(3), np.zeros((3, 3))]))

    def test_each_output_impulse_response(self, rng):
        for _ in range(10):
            n_S = int(rng.integers(1, 4))
            D = int(rng.integers(1, 6))
            G = rng.uniform(0, 1, (n_S, D))
            A, B, C = realize_observability(list(G), D, n_S)
            x = B[:, 0].copy()
            for k in range(D + 3):
                want = G[:, k] if k < D else np.zeros(n_S)
                assert np.allclose(C @ x, want, atol=1e-14)
                x = A @ x

    def test_leaf_count_mismatch(self):
        with pytest.raises(ModelError):
            realize_observability([(1.0,)], 1, 2)


class TestAssembly:
    def plant(self, n=1):
        return DiscreteLTI(np.array([[0.5]]), np.array([[2.0]]), np.array([[3.0]]), 1.0)

    def test_all_scalar_layout(self):
        P = self.plant()
        ctrl = realize_controllability((1.0,))
        obs = realize_observability([(1.0,)], 1, 1)
        s = assemble_mcn(obs, P, ctrl)
        assert s.A.tolist() == [[0, 3, 0], [0, 0.5, 2], [0, 0, 0]]
        assert s.B[:, 0].tolist() == [0, 0, 1]
        assert s.C.tolist() == [[1, 0, 0]]

    def test_matches_block_chain(self, rng):
        for _ in range(10):
            nP = int(rng.integers(1, 4))
            A_P = rng.standard_normal((nP, nP)) * 0.4
            P = DiscreteLTI(A_P, rng.standard_normal((nP, 1)), rng.standard_normal((1, nP)), 0.1)
            gR = rng.uniform(0.1, 1, int(rng.integers(1, 4)))
            n_S = int(rng.integers(1, 4))
            D_O = int(rng.integers(1, 4))
            gO = rng.uniform(0.1, 1, (n_S, D_O))
            s = assemble_mcn(realize_observability(list(gO), D_O, n_S), P,
                             realize_controllability(gR))
            u = rng.standard_normal(30)
            _, y = s.simulate(u)
            # chain three FIR/LTI blocks directly
            ut = np.array([sum(gR[d - 1] * u[k - d] for d in range(1, len(gR) + 1) if k - d >= 0)
                           for k in range(30)])
            x = np.zeros(nP)
            yp = []
            for k in range(30):
                yp.append(float(P.C[0] @ x))
                x = P.A @ x + P.B[:, 0] * ut[k]
            want = np.array([[sum(gO[i, d - 1] * yp[k - d] for d in range(1, D_O + 1) if k - d >= 0)
                              for i in range(n_S)] for k in range(30)])
            assert np.max(np.abs(y - want)) < 1e-10
            assert s.n == (D_O + n_S - 1) + nP + len(gR)
            assert np.linalg.matrix_rank(s.C) == n_S

    def test_dimension_mismatch(self):
        P = self.plant()
        A, B, C = realize_controllability((1.0, 1.0))
        with pytest.raises(ModelError):
            assemble_mcn(realize_observability([(1.0,)], 1, 1), P, (A, B[:1], C))
