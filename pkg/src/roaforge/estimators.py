"""Scikit-learn-style estimators wrapping synthesis and ROA certification.

These are thin facades over the functional core so the toolkit composes with
the wider ecosystem: hyperparameters live in ``__init__`` and survive
``get_params``/``set_params``/``clone``, fitted state lands in trailing-
underscore attributes, and ``predict`` operates on (N, n) state arrays.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import bench, pipeline
from .dynamics import Controller, control_input
from .lqr import lqr_cost_metric
from .validation import check_state_batch


def _resolve_benchmark(benchmark, X):
    if X is not None and isinstance(X, bench.BenchmarkSpec):
        return X
    if isinstance(benchmark, bench.BenchmarkSpec):
        return benchmark
    return bench.by_name(benchmark)


class SwarmGainSynthesizer(BaseEstimator):
    """Synthesize a feedback gain by deterministic swarm search.

    ``fit`` accepts an optional :class:`~roaforge.bench.BenchmarkSpec` as X
    (defaulting to the named benchmark) and stores the synthesized gain;
    ``predict`` maps states to saturated control inputs under that gain.
    """

    def __init__(
        self,
        benchmark="pendulum_a",
        w1=1.0,
        w2=1.0,
        num_particles=20,
        max_iter=2000,
        stall_window=100,
        seed=0,
        candidate="quadratic",
        grid_points=101,
        tau=0.01,
        omega=None,
        eta=None,
    ):
        self.benchmark = benchmark
        self.w1 = w1
        self.w2 = w2
        self.num_particles = num_particles
        self.max_iter = max_iter
        self.stall_window = stall_window
        self.seed = seed
        self.candidate = candidate
        self.grid_points = grid_points
        self.tau = tau
        self.omega = omega
        self.eta = eta

    def fit(self, X=None, y=None):
        spec = _resolve_benchmark(self.benchmark, X)
        setup = pipeline.prepare(
            spec,
            tau=self.tau,
            grid_points=self.grid_points,
            candidate_kind=self.candidate,
        )
        result = pipeline.synthesize_gain(
            setup,
            w1=self.w1,
            w2=self.w2,
            num_particles=self.num_particles,
            max_iter=self.max_iter,
            stall_window=self.stall_window,
            seed=self.seed,
            omega=self.omega,
            eta=self.eta,
        )
        self.setup_ = setup
        self.result_ = result
        self.gain_ = result.gbest.K
        self.lqr_gain_ = setup.lqr_controller.K
        self.baseline_cost_ = setup.baseline_cost
        self.baseline_roa_ = setup.baseline_roa
        return self

    def _check_fitted(self):
        if not hasattr(self, "gain_"):
            raise NotFittedError("call fit before using this estimator")

    def predict(self, X):
        """Control inputs of the synthesized feedback at each state row."""
        self._check_fitted()
        plant = self.setup_.bench.plant
        states = check_state_batch(X, plant.state_dim)
        ctrl = Controller(K=self.gain_)
        return np.vstack([control_input(plant, ctrl, x) for x in states])

    def score(self, X=None, y=None):
        """Negated scalarized objective at the synthesized gain (higher is better)."""
        self._check_fitted()
        return float(-self.result_.gbest_fitness)


class RoaRegionEstimator(BaseEstimator):
    """Certify a region of attraction and classify states against it.

    ``fit`` certifies the configured gain (the LQR gain when ``gain`` is
    None); ``predict`` returns a boolean per state for membership in the
    certified level set, and ``score`` is the certified fraction of the grid.
    """

    def __init__(
        self,
        benchmark="pendulum_a",
        gain=None,
        candidate="quadratic",
        grid_points=101,
        tau=0.01,
        exemption_radius=None,
        seed=0,
    ):
        self.benchmark = benchmark
        self.gain = gain
        self.candidate = candidate
        self.grid_points = grid_points
        self.tau = tau
        self.exemption_radius = exemption_radius
        self.seed = seed

    def fit(self, X=None, y=None):
        from .certificate import QuadraticCandidate, certify_roa, linear_step_map
        from .lyapunov_nn import NeuralCandidate, TrainConfig, net_init, train

        spec = _resolve_benchmark(self.benchmark, X)
        setup = pipeline.prepare(
            spec,
            tau=self.tau,
            grid_points=self.grid_points,
            candidate_kind=self.candidate,
            exemption_radius=self.exemption_radius,
        )
        ctrl = setup.lqr_controller if self.gain is None else Controller(K=np.asarray(self.gain, dtype=float))
        report = lqr_cost_metric(setup.dsys, ctrl, spec.cost)
        if not report.stable:
            raise ValueError("cannot certify an unstable closed loop")
        A_cl = setup.dsys.A_tau - setup.dsys.B_tau @ ctrl.K
        step = linear_step_map(A_cl)
        if self.candidate == "quadratic":
            cand = QuadraticCandidate(P=report.P, step_matrix=A_cl)
        else:
            net = net_init((spec.plant.state_dim, 16, 16), seed=self.seed)
            outcome = train(
                net,
                step,
                setup.grid,
                TrainConfig(seed=self.seed),
                step_norm=float(np.linalg.norm(A_cl, 2)),
                exemption_radius=self.exemption_radius,
            )
            cand = NeuralCandidate(net=outcome.net, step_norm=float(np.linalg.norm(A_cl, 2)))
        self.setup_ = setup
        self.gain_ = ctrl.K
        self.candidate_ = cand
        self.estimate_ = certify_roa(cand, step, setup.grid, exemption_radius=self.exemption_radius)
        self.threshold_ = self.estimate_.threshold_c
        return self

    def _check_fitted(self):
        if not hasattr(self, "estimate_"):
            raise NotFittedError("call fit before using this estimator")

    def predict(self, X):
        """True where a state lies in the certified region (level set or core ball)."""
        self._check_fitted()
        grid = self.setup_.grid
        states = check_state_batch(X, grid.dim)
        inside_box = np.all((states >= grid.lower) & (states <= grid.upper), axis=1)
        values = self.candidate_.evaluate(states)
        in_core = np.linalg.norm(states, axis=1) <= self.estimate_.exemption_radius
        return inside_box & ((values < self.threshold_) | in_core)

    def score(self, X=None, y=None):
        """Certified fraction of the grid."""
        self._check_fitted()
        return float(self.estimate_.size_fraction)
