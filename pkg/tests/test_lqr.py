import numpy as np
import pytest
import scipy.linalg

from roaforge.dynamics import Controller, DiscreteLinearSystem, LinearSystem, discretize, is_schur
from roaforge.errors import UnstableClosedLoopError
from roaforge.lqr import CostReport, CostWeights, dare_residual, lqr_cost_metric, lqr_gain, solve_discrete_lyapunov


def series_solution(A_cl, M, tol=1e-14):
    """Independent oracle: P = sum_k (A')^k M A^k, summed to convergence."""
    P = np.zeros_like(M)
    term = M.copy()
    for _ in range(100_000):
        P = P + term
        if np.linalg.norm(term, "fro") < tol:
            return P
        term = A_cl.T @ term @ A_cl
    raise AssertionError("series did not converge")


def random_schur(rng, n):
    A = rng.normal(size=(n, n))
    return A * (rng.uniform(0.05, 0.95) / np.max(np.abs(np.linalg.eigvals(A))))


class TestSolveDiscreteLyapunov:
    def test_scalar_against_series(self):
        P = solve_discrete_lyapunov(np.array([[0.25]]), np.array([[1.0625]]))
        assert abs(P[0, 0] - 17.0 / 15.0) < 1e-9  # 1.0625 / (1 - 0.0625)
        oracle = series_solution(np.array([[0.25]]), np.array([[1.0625]]))
        assert abs(P[0, 0] - oracle[0, 0]) < 1e-12

    def test_zero_loop_returns_weight(self):
        M = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert np.allclose(solve_discrete_lyapunov(np.zeros((2, 2)), M), M, atol=1e-14)

    def test_decoupled_diagonal(self):
        P = solve_discrete_lyapunov(np.diag([0.5, 0.3]), np.eye(2))
        assert np.allclose(np.diag(P), [1.3333333, 1.0989011], atol=1e-7)

    def test_random_loops_match_series_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            n = rng.integers(1, 5)
            A_cl = random_schur(rng, n)
            W = rng.normal(size=(n, n))
            M = W @ W.T + 0.1 * np.eye(n)
            P = solve_discrete_lyapunov(A_cl, M)
            oracle = series_solution(A_cl, M)
            assert np.linalg.norm(P - oracle, "fro") <= 1e-8 * np.linalg.norm(oracle, "fro")

    def test_matches_scipy(self):
        rng = np.random.default_rng(5)
        A_cl = random_schur(rng, 3)
        M = np.eye(3)
        ours = solve_discrete_lyapunov(A_cl, M)
        # scipy solves A X A' - X + Q = 0, so pass the transposed loop
        ref = scipy.linalg.solve_discrete_lyapunov(A_cl.T, M)
        assert np.allclose(ours, ref, atol=1e-10)

    def test_unstable_loop_rejected(self):
        with pytest.raises(UnstableClosedLoopError):
            solve_discrete_lyapunov(np.array([[1.0]]), np.array([[1.0]]))

    def test_uniqueness_under_row_permutation(self):
        rng = np.random.default_rng(9)
        A_cl = random_schur(rng, 3)
        M = np.eye(3)
        P = solve_discrete_lyapunov(A_cl, M)
        system = np.kron(A_cl.T, A_cl.T) - np.eye(9)
        perm = rng.permutation(9)
        p = np.linalg.solve(system[perm], -M.reshape(-1)[perm])
        assert np.linalg.norm(p.reshape(3, 3) - P) < 1e-10


class TestLqrCostMetric:
    def test_scalar_example(self):
        dsys = DiscreteLinearSystem(np.array([[0.5]]), np.array([[1.0]]), 0.01)
        report = lqr_cost_metric(dsys, Controller(K=np.array([[0.25]])), CostWeights(Q=np.eye(1), R=np.eye(1)))
        assert report.stable
        assert abs(report.metric - 1.1333333) < 1e-7

    def test_unstable_gain_gets_infinite_metric(self):
        dsys = DiscreteLinearSystem(np.array([[1.5]]), np.array([[1.0]]), 0.01)
        report = lqr_cost_metric(dsys, Controller(K=np.array([[0.1]])), CostWeights(Q=np.eye(1), R=np.eye(1)))
        assert not report.stable
        assert report.metric == np.inf
        assert report.P is None

    def test_lqr_gain_beats_perturbations_on_double_integrator(self):
        lin = LinearSystem(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
        dsys = discretize(lin, 0.01)
        w = CostWeights(Q=np.eye(2), R=np.eye(1))
        K_opt = lqr_gain(dsys, w)
        base = lqr_cost_metric(dsys, K_opt, w).metric
        rng = np.random.default_rng(17)
        checked = 0
        for _ in range(100):
            K = Controller(K=K_opt.K + rng.uniform(-0.5, 0.5, size=(1, 2)))
            report = lqr_cost_metric(dsys, K, w)
            if report.stable:
                checked += 1
                assert report.metric >= base - 1e-9
        assert checked > 50

    def test_metric_is_spectral_norm(self):
        dsys = DiscreteLinearSystem(np.array([[0.7, 0.2], [0.0, 0.6]]), np.array([[0.0], [1.0]]), 0.01)
        report = lqr_cost_metric(dsys, Controller(K=np.array([[0.1, 0.1]])), CostWeights(Q=np.eye(2), R=np.eye(1)))
        assert abs(report.metric - np.linalg.norm(report.P, 2)) < 1e-12

    def test_report_spd_when_stable(self):
        dsys = DiscreteLinearSystem(np.array([[0.9, 0.05], [0.0, 0.85]]), np.array([[0.0], [1.0]]), 0.01)
        report = lqr_cost_metric(dsys, Controller(K=np.array([[0.2, 0.3]])), CostWeights(Q=np.eye(2), R=np.eye(1)))
        assert np.allclose(report.P, report.P.T)
        assert np.linalg.eigvalsh(report.P).min() > 0


class TestLqrGain:
    def test_golden_ratio(self):
        dsys = DiscreteLinearSystem(np.array([[1.0]]), np.array([[1.0]]), 1.0)
        ctrl = lqr_gain(dsys, CostWeights(Q=np.eye(1), R=np.eye(1)))
        assert abs(ctrl.K[0, 0] - (np.sqrt(5.0) - 1.0) / 2.0) < 1e-8

    def test_no_actuation_no_gain(self):
        dsys = DiscreteLinearSystem(np.array([[0.5]]), np.array([[0.0]]), 1.0)
        ctrl = lqr_gain(dsys, CostWeights(Q=np.eye(1), R=np.eye(1)))
        assert ctrl.K[0, 0] == 0.0

    def test_double_integrator_residual_and_stability(self):
        lin = LinearSystem(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
        dsys = discretize(lin, 0.01)
        w = CostWeights(Q=np.eye(2), R=np.eye(1))
        ctrl = lqr_gain(dsys, w)
        assert is_schur(dsys, ctrl)
        P = solve_discrete_lyapunov(dsys.A_tau - dsys.B_tau @ ctrl.K, w.Q + ctrl.K.T @ w.R @ ctrl.K)
        assert dare_residual(dsys, w, P) < 1e-10

    def test_divergence_reported_for_unstabilizable_pair(self):
        from roaforge.errors import DareDivergenceError

        dsys = DiscreteLinearSystem(np.array([[2.0]]), np.array([[0.0]]), 1.0)
        with pytest.raises(DareDivergenceError):
            lqr_gain(dsys, CostWeights(Q=np.eye(1), R=np.eye(1)))

    def test_matches_scipy_dare(self):
        rng = np.random.default_rng(31)
        A = rng.normal(size=(3, 3)) * 0.4 + np.eye(3) * 0.5
        B = rng.normal(size=(3, 2))
        dsys = DiscreteLinearSystem(A, B, 0.01)
        w = CostWeights(Q=np.eye(3), R=np.eye(2))
        ours = lqr_gain(dsys, w).K
        P_ref = scipy.linalg.solve_discrete_are(A, B, w.Q, w.R)
        K_ref = np.linalg.solve(w.R + B.T @ P_ref @ B, B.T @ P_ref @ A)
        assert np.allclose(ours, K_ref, atol=1e-8)


class TestCostProperties:
    def test_quadratic_bound(self):
        dsys = DiscreteLinearSystem(np.array([[0.8, 0.1], [0.0, 0.9]]), np.array([[0.0], [1.0]]), 0.01)
        report = lqr_cost_metric(dsys, Controller(K=np.array([[0.05, 0.3]])), CostWeights(Q=np.eye(2), R=np.eye(1)))
        rng = np.random.default_rng(2)
        for _ in range(200):
            x0 = rng.normal(size=2)
            assert x0 @ report.P @ x0 <= report.metric * x0 @ x0 + 1e-9

    def test_finite_horizon_sum_matches_quadratic_form(self):
        lin = LinearSystem(np.array([[0.0, 1.0], [-3.0, -2.5]]), np.array([[0.0], [2.0]]))
        dsys = discretize(lin, 0.01)
        w = CostWeights(Q=np.eye(2), R=np.eye(1))
        K = np.array([[0.8, 0.4]])
        report = lqr_cost_metric(dsys, Controller(K=K), w)
        A_cl = dsys.A_tau - dsys.B_tau @ K
        rng = np.random.default_rng(12)
        for _ in range(5):
            x = rng.normal(size=2)
            expected = x @ report.P @ x
            total = 0.0
            xi = x.copy()
            for _ in range(10_000):
                u = -K @ xi
                total += xi @ w.Q @ xi + u @ w.R @ u
                xi = A_cl @ xi
            assert abs(total - expected) <= 1e-6 * abs(expected)
