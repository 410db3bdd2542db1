"""End-to-end acceptance gates.

Each test prints one PASS/FAIL line (run with `pytest -s` to see them all)
and enforces its runtime budget.  Soft, non-gating observations are printed
with a REPORT prefix.
"""

import json
import time

import numpy as np
import pytest

from roaforge import bench, pipeline
from roaforge.certificate import QuadraticCandidate, certify_roa, linear_step_map
from roaforge.dynamics import Controller, simulate
from roaforge.lqr import dare_residual, lqr_cost_metric, lqr_gain, solve_discrete_lyapunov
from roaforge.lyapunov_nn import NeuralCandidate, TrainConfig, net_eval, net_gradient, net_init, train
from roaforge.pso import PsoParams, swarm_minimize


class Gate:
    """Prints the one-line verdict and enforces the runtime budget."""

    def __init__(self, name: str, budget_s: float):
        self.name = name
        self.budget_s = budget_s

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        verdict = "PASS" if exc_type is None else "FAIL"
        print(f"[{verdict}] {self.name} ({elapsed:.1f}s / budget {self.budget_s:.0f}s)")
        if exc_type is None:
            assert elapsed < self.budget_s, f"{self.name}: runtime {elapsed:.1f}s over budget"
        return False


def all_benchmarks():
    return [bench.by_name(name) for name in bench.BENCHMARK_NAMES]


def series_solution(A_cl, M, tol=1e-14):
    P = np.zeros_like(M)
    term = M.copy()
    for _ in range(200_000):
        P = P + term
        if np.linalg.norm(term, "fro") < tol:
            return P
        term = A_cl.T @ term @ A_cl
    raise AssertionError("series oracle did not converge")


def test_lyapunov_solver_oracle_equivalence():
    with Gate("Lyapunov solver matches truncated-series oracle (200 loops)", 10.0):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            A = rng.normal(size=(n, n))
            A_cl = A * (rng.uniform(0.05, 0.9) / np.max(np.abs(np.linalg.eigvals(A))))
            W = rng.normal(size=(n, n))
            M = W @ W.T + 0.05 * np.eye(n)
            P = solve_discrete_lyapunov(A_cl, M)
            oracle = series_solution(A_cl, M)
            err = np.linalg.norm(P - oracle, "fro") / np.linalg.norm(oracle, "fro")
            assert err <= 1e-8


def test_dare_golden_ratio_and_benchmark_residuals():
    with Gate("DARE golden ratio and residuals on all benchmarks", 5.0):
        from roaforge.dynamics import DiscreteLinearSystem
        from roaforge.lqr import CostWeights

        dsys = DiscreteLinearSystem(np.array([[1.0]]), np.array([[1.0]]), 1.0)
        K = lqr_gain(dsys, CostWeights(Q=np.eye(1), R=np.eye(1))).K[0, 0]
        assert abs(K - 0.618034) < 1e-6

        for spec in all_benchmarks():
            setup = pipeline.prepare(spec, tau=0.01, grid_points=11)
            ctrl = setup.lqr_controller
            A_cl = setup.dsys.A_tau - setup.dsys.B_tau @ ctrl.K
            P = solve_discrete_lyapunov(A_cl, spec.cost.Q + ctrl.K.T @ spec.cost.R @ ctrl.K)
            assert dare_residual(setup.dsys, spec.cost, P) < 1e-10, spec.name


def test_lqr_optimality_order_on_all_benchmarks():
    with Gate("LQR gain is cost-optimal against 100 perturbations per benchmark", 30.0):
        rng = np.random.default_rng(1)
        for spec in all_benchmarks():
            setup = pipeline.prepare(spec, tau=0.01, grid_points=11)
            base = setup.baseline_cost
            K0 = setup.lqr_controller.K
            checked = 0
            for _ in range(100):
                ctrl = Controller(K=K0 + rng.uniform(-0.5, 0.5, size=K0.shape))
                report = lqr_cost_metric(setup.dsys, ctrl, spec.cost)
                if report.stable:
                    checked += 1
                    assert base <= report.metric + 1e-9, spec.name
            assert checked >= 30, f"{spec.name}: too few stable perturbations ({checked})"


def test_roa_soundness_pendulum_a():
    with Gate("certified cells all converge in 500 linear steps (pendulum A)", 60.0):
        setup = pipeline.prepare(bench.pendulum_a(), tau=0.01, grid_points=101)
        ctrl = setup.lqr_controller
        report = lqr_cost_metric(setup.dsys, ctrl, setup.bench.cost)
        A_cl = setup.dsys.A_tau - setup.dsys.B_tau @ ctrl.K
        est = certify_roa(QuadraticCandidate(P=report.P, step_matrix=A_cl), linear_step_map(A_cl), setup.grid)
        assert est.size_cells > 0
        states = setup.grid.centers[est.certified_cells]
        final = states @ np.linalg.matrix_power(A_cl, 500).T
        norms = np.linalg.norm(final, axis=1)
        assert np.all(norms < 1e-4), f"worst residual {norms.max():.3e}"
        print(f"  certified {est.size_cells} cells, worst 500-step residual {norms.max():.2e}")


def test_exact_quadratic_decrease_identity():
    with Gate("quadratic decrease identity to 1e-10 on all benchmarks", 30.0):
        rng = np.random.default_rng(2)
        for spec in all_benchmarks():
            setup = pipeline.prepare(spec, tau=0.01, grid_points=11)
            ctrl = setup.lqr_controller
            M = spec.cost.Q + ctrl.K.T @ spec.cost.R @ ctrl.K
            A_cl = setup.dsys.A_tau - setup.dsys.B_tau @ ctrl.K
            P = solve_discrete_lyapunov(A_cl, M)
            cand = QuadraticCandidate(P=P, step_matrix=A_cl)
            n = spec.plant.state_dim
            X = rng.uniform(-1.0, 1.0, size=(1000, n))
            lhs = cand.evaluate(X @ A_cl.T) - cand.evaluate(X)
            rhs = -np.einsum("ni,ij,nj->n", X, M, X)
            scale = np.maximum(1.0, np.abs(rhs))
            assert np.max(np.abs(lhs - rhs) / scale) < 1e-10, spec.name


def test_nn_gradient_positivity_and_zero():
    with Gate("network gradients match differences; v(0)=0; positivity", 60.0):
        rng = np.random.default_rng(3)
        h = 1e-5
        worst = 0.0
        for trial in range(50):
            net = net_init((2, 6, 6), seed=trial + 100)
            x = rng.uniform(-1.0, 1.0, size=2)
            (dGs, dHs), _ = net_gradient(net, x)
            grads = np.concatenate([a.ravel() for pair in zip(dGs, dHs) for a in pair])
            numeric = np.empty_like(grads)
            idx = 0
            for layer in range(net.num_layers):
                for arr in (net.Gs[layer], net.Hs[layer]):
                    flat = arr.reshape(-1)
                    for j in range(flat.size):
                        orig = flat[j]
                        flat[j] = orig + h
                        up = float(net_eval(net, x))
                        flat[j] = orig - h
                        down = float(net_eval(net, x))
                        flat[j] = orig
                        numeric[idx] = (up - down) / (2.0 * h)
                        idx += 1
            scale = max(1.0, float(np.abs(numeric).max()))
            worst = max(worst, float(np.abs(grads - numeric).max()) / scale)
        assert worst < 1e-4, f"worst gradient error {worst:.2e}"

        net = net_init((2, 16, 16), seed=0)
        assert float(net_eval(net, np.zeros(2))) == 0.0
        X = rng.uniform(-1.0, 1.0, size=(10_000, 2))
        X = X[np.linalg.norm(X, axis=1) > 1e-9]
        assert np.all(net_eval(net, X) > 0.0)


def test_pso_sphere_sanity():
    with Gate("swarm reaches the sphere optimum; monotone; deterministic", 30.0):
        params = PsoParams(
            bounds_lower=np.array([-5.0, -5.0]),
            bounds_upper=np.array([5.0, 5.0]),
            num_particles=30,
            max_iter=1000,
            stall_window=1000,
            seed=0,
            omega=0.7,
            eta=1.6,
        )

        def sphere(x):
            return float(x @ x), ()

        result = swarm_minimize(sphere, params)
        assert np.linalg.norm(result.gbest) < 1e-3
        fs = [row[0] for row in result.history]
        assert all(fs[i + 1] <= fs[i] for i in range(len(fs) - 1))

        def dump(r):
            return json.dumps(
                {"g": r.gbest.tolist(), "f": r.gbest_fitness, "h": [list(x) for x in r.history]}
            ).encode()

        for seed in (0, 7):
            p = PsoParams(
                bounds_lower=params.bounds_lower,
                bounds_upper=params.bounds_upper,
                num_particles=30,
                max_iter=200,
                stall_window=100,
                seed=seed,
                omega=0.7,
                eta=1.6,
            )
            assert dump(swarm_minimize(sphere, p)) == dump(swarm_minimize(sphere, p))


def test_synthesis_recovers_lqr_cost():
    with Gate("cost-only synthesis within 1% of the Riccati gain (pendulum A)", 300.0):
        setup = pipeline.prepare(bench.pendulum_a(), tau=0.01, grid_points=51)
        result = pipeline.synthesize_gain(
            setup, w1=1.0, w2=0.0, num_particles=20, max_iter=2000, stall_window=100, seed=0
        )
        cost, _ = pipeline.evaluate_controller(setup, result.gbest)
        assert cost <= 1.01 * setup.baseline_cost
        print(f"  synthesized cost {cost:.4f} vs Riccati {setup.baseline_cost:.4f}")


def test_directional_tradeoff_reproduction():
    with Gate("ROA/cost orderings across K_LQR, K_O, K_max (3 seeds)", 1800.0):
        setup = pipeline.prepare(bench.pendulum_a(), tau=0.01, grid_points=101)
        w1, w2 = bench.DEFAULT_CO_WEIGHTS
        ordered_seeds = 0
        gapped_seeds = 0
        for seed in (0, 1, 2):
            r_max = pipeline.synthesize_gain(
                setup, w1=0.0, w2=1.0, num_particles=10, max_iter=2000, stall_window=100, seed=seed
            )
            r_o = pipeline.synthesize_gain(
                setup, w1=w1, w2=w2, num_particles=10, max_iter=2000, stall_window=100, seed=seed
            )
            c_max, s_max = pipeline.evaluate_controller(setup, r_max.gbest)
            c_o, s_o = pipeline.evaluate_controller(setup, r_o.gbest)
            c_lqr, s_lqr = setup.baseline_cost, setup.baseline_roa
            roa_chain = s_max >= s_o >= s_lqr
            cost_chain = c_lqr <= c_o + 1e-9 and c_o <= c_max + 1e-9
            gaps = (s_max > s_lqr) and (c_max > c_lqr + 1e-9)
            ordered_seeds += roa_chain and cost_chain
            gapped_seeds += roa_chain and cost_chain and gaps
            print(
                f"  seed {seed}: roa lqr/o/max = {s_lqr}/{s_o}/{s_max}  "
                f"cost = {c_lqr:.1f}/{c_o:.1f}/{c_max:.1f}  ordered={roa_chain and cost_chain} gaps={gaps}"
            )
        assert ordered_seeds >= 2, f"orderings held in only {ordered_seeds}/3 seeds"
        assert gapped_seeds >= 2, f"nonzero end-to-end gaps in only {gapped_seeds}/3 seeds"


def test_mass_sweep_trend():
    with Gate("certified ROA non-increasing over masses 0.1..0.7 kg", 1800.0):
        rows = bench.experiment_mass_sweep(
            [0.1, 0.3, 0.5, 0.7], grid_points=101, num_particles=10, max_iter=2000, stall_window=100, seed=0
        )
        sizes = [row["roa_cells"] for row in rows]
        print(f"  sizes by mass: {dict((r['mass_kg'], r['roa_cells']) for r in rows)}")
        assert all(sizes[i] >= sizes[i + 1] for i in range(len(sizes) - 1)), sizes


def test_grid_sweep_trend():
    with Gate("ROA cells non-decreasing and time increasing with resolution", 900.0):
        rows = bench.experiment_grid_sweep(bench.vehicle_steering(), [51, 101, 151, 201], timing_repeats=5)
        cells = [row["roa_cells"] for row in rows]
        seconds = [row["seconds"] for row in rows]
        print(f"  cells: {cells}")
        print(f"  seconds: {[f'{s:.4f}' for s in seconds]}")
        assert all(cells[i] <= cells[i + 1] for i in range(len(cells) - 1)), cells
        assert all(seconds[i] < seconds[i + 1] for i in range(len(seconds) - 1)), seconds


def test_recovery_demonstration():
    with Gate("saturated recovery from pi/6 for K_LQR and K_O (pendulum A)", 600.0):
        spec = bench.pendulum_a()
        setup = pipeline.prepare(spec, tau=0.01, grid_points=101)
        w1, w2 = bench.DEFAULT_CO_WEIGHTS
        r_o = pipeline.synthesize_gain(
            setup, w1=w1, w2=w2, num_particles=10, max_iter=2000, stall_window=100, seed=1
        )
        controllers = {"K_LQR": setup.lqr_controller, "K_O": r_o.gbest}
        steps = 5000  # 50 s at tau = 0.01

        def final_angle(ctrl, angle):
            traj = simulate(spec.plant, ctrl, np.array([angle, 0.0]), 0.01, steps)
            return np.inf if traj.diverged else abs(traj.states[-1, 0])

        for label, ctrl in controllers.items():
            residual = final_angle(ctrl, np.pi / 6.0)
            assert residual < 1e-2, f"{label} failed from pi/6 (|angle| = {residual:.3f})"

        # soft part: look for a start angle that separates the two controllers
        separating = None
        for angle in np.linspace(np.pi / 6.0, np.pi / 2.0, 13):
            ok_o = final_angle(controllers["K_O"], angle) < 1e-2
            ok_lqr = final_angle(controllers["K_LQR"], angle) < 1e-2
            if ok_o and not ok_lqr:
                separating = angle
                break
        if separating is None:
            print("  REPORT: no start angle in [pi/6, pi/2] separates K_O from K_LQR at this torque limit")
        else:
            print(f"  REPORT: K_O recovers from {separating:.3f} rad where K_LQR does not")


def test_neural_candidate_training_gain():
    with Gate("trained network never certifies less than its untrained start", 600.0):
        setup = pipeline.prepare(bench.pendulum_a(), tau=0.01, grid_points=51)
        ctrl = setup.lqr_controller
        report = lqr_cost_metric(setup.dsys, ctrl, setup.bench.cost)
        A_cl = setup.dsys.A_tau - setup.dsys.B_tau @ ctrl.K
        step = linear_step_map(A_cl)
        step_norm = float(np.linalg.norm(A_cl, 2))

        outcome = train(
            net_init((2, 16, 16), seed=0),
            step,
            setup.grid,
            TrainConfig(epochs=50, batch_size=256, learning_rate=1e-2, seed=0),
            step_norm=step_norm,
        )
        untrained = outcome.size_history[0]
        best = max(outcome.size_history)
        assert best >= untrained, outcome.size_history

        est_net = certify_roa(NeuralCandidate(net=outcome.net, step_norm=step_norm), step, setup.grid)
        assert est_net.size_cells == best

        est_quad = certify_roa(QuadraticCandidate(P=report.P, step_matrix=A_cl), step, setup.grid)
        relation = ">=" if best >= est_quad.size_cells else "<"
        print(
            f"  REPORT: trained net {best} cells {relation} quadratic {est_quad.size_cells} cells "
            f"(untrained start {untrained})"
        )
