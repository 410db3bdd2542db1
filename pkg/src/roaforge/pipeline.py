"""Glue between benchmarks, the cost metric, the certifier, and the swarm.

`prepare` builds everything the fitness needs once per plant: the discrete
linearization, the shared fixed grid, the LQR baseline gain, and the two
normalization baselines.  `PlantContext.evaluate` is the total fitness map
used by the swarm loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificate import QuadraticCandidate, StateGrid, build_grid, certify_roa, linear_step_map
from .dynamics import Controller, DiscreteLinearSystem, discretize, linearize
from .errors import NumericError
from .lqr import CostWeights, lqr_cost_metric, lqr_gain
from .lyapunov_nn import LyapunovNet, NeuralCandidate, TrainConfig, net_init, train
from .pso import FitnessSpec, PsoParams, SynthesisResult, synthesize

DEFAULT_NET_WIDTH = 16


class PlantContext:
    """Total fitness evaluator over gains for one prepared plant.

    For the neural candidate kind, each evaluation retrains from the net of
    the best gain seen so far by this context (a warm start that tracks the
    swarm's gbest); pass warm_start=False for independent cold starts.
    """

    def __init__(
        self,
        dsys: DiscreteLinearSystem,
        weights: CostWeights,
        grid: StateGrid,
        candidate_kind: str = "quadratic",
        exemption_radius: float | None = None,
        train_config: TrainConfig | None = None,
        warm_start: bool = True,
    ):
        self.dsys = dsys
        self.weights = weights
        self.grid = grid
        self.candidate_kind = candidate_kind
        self.exemption_radius = exemption_radius
        self.train_config = train_config or TrainConfig()
        self.warm_start = warm_start
        self._best_seen = np.inf
        self._best_net: LyapunovNet | None = None
        self._last_net: LyapunovNet | None = None

    @property
    def gain_shape(self) -> tuple[int, int]:
        return self.dsys.input_dim, self.dsys.state_dim

    def certified_size(self, ctrl: Controller, P: np.ndarray) -> int:
        """Certified cell count of one stable gain under the configured kind."""
        A_cl = self.dsys.A_tau - self.dsys.B_tau @ ctrl.K
        step = linear_step_map(A_cl)
        if self.candidate_kind == "quadratic":
            cand = QuadraticCandidate(P=P, step_matrix=A_cl)
            est = certify_roa(cand, step, self.grid, exemption_radius=self.exemption_radius)
            return est.size_cells
        step_norm = float(np.linalg.norm(A_cl, 2))
        if self.warm_start and self._best_net is not None:
            net = self._best_net
        else:
            net = net_init(
                (self.dsys.state_dim, DEFAULT_NET_WIDTH, DEFAULT_NET_WIDTH),
                seed=self.train_config.seed,
            )
        outcome = train(
            net,
            step,
            self.grid,
            self.train_config,
            step_norm=step_norm,
            exemption_radius=self.exemption_radius,
        )
        self._last_net = outcome.net
        return max(outcome.size_history)

    def evaluate(self, ctrl: Controller, spec: FitnessSpec) -> tuple[float, float, float]:
        """(fitness, normalized cost, normalized roa); +inf when not Schur."""
        report = lqr_cost_metric(self.dsys, ctrl, self.weights)
        if not report.stable:
            return np.inf, np.inf, 0.0
        cost_norm = report.metric / spec.baseline_cost
        if spec.w2 == 0.0:
            # The roa term carries zero weight; skip the certification work.
            value = spec.w1 * cost_norm
            return value, cost_norm, 0.0
        size = self.certified_size(ctrl, report.P)
        roa_norm = size / spec.baseline_roa
        value = spec.w1 * cost_norm - spec.w2 * roa_norm
        if self.candidate_kind == "neural" and value < self._best_seen:
            self._best_seen = value
            self._best_net = self._last_net
        return value, cost_norm, roa_norm


@dataclass(frozen=True)
class PlantSetup:
    """Prepared plant: discrete model, grid, LQR baselines, fitness context.

    `bench` is the benchmark spec the setup was prepared from (kept untyped
    here to avoid a circular import with the benchmarks module).
    """

    bench: object
    dsys: DiscreteLinearSystem
    grid: StateGrid
    lqr_controller: Controller
    baseline_cost: float
    baseline_roa: int
    context: PlantContext
    tau: float


def prepare(
    bench_spec,
    *,
    tau: float = 0.01,
    grid_points: int = 250,
    candidate_kind: str = "quadratic",
    exemption_radius: float | None = None,
    train_config: TrainConfig | None = None,
    warm_start: bool = True,
) -> PlantSetup:
    """Discretize the plant, build the shared grid, and compute LQR baselines."""
    lin = linearize(bench_spec.plant)
    dsys = discretize(lin, tau)
    n = bench_spec.plant.state_dim
    grid = build_grid(bench_spec.roa_domain_lower, bench_spec.roa_domain_upper, [int(grid_points)] * n)
    context = PlantContext(
        dsys=dsys,
        weights=bench_spec.cost,
        grid=grid,
        candidate_kind=candidate_kind,
        exemption_radius=exemption_radius,
        train_config=train_config,
        warm_start=warm_start,
    )
    ctrl = lqr_gain(dsys, bench_spec.cost)
    report = lqr_cost_metric(dsys, ctrl, bench_spec.cost)
    if not report.stable:
        raise NumericError("the LQR gain failed the closed-loop stability check")
    baseline_roa = context.certified_size(ctrl, report.P)
    return PlantSetup(
        bench=bench_spec,
        dsys=dsys,
        grid=grid,
        lqr_controller=ctrl,
        baseline_cost=report.metric,
        baseline_roa=baseline_roa,
        context=context,
        tau=tau,
    )


def fitness_spec(setup: PlantSetup, w1: float, w2: float) -> FitnessSpec:
    return FitnessSpec(
        w1=w1,
        w2=w2,
        baseline_cost=setup.baseline_cost,
        baseline_roa=setup.baseline_roa,
        candidate_kind=setup.context.candidate_kind,
    )


def synthesize_gain(
    setup: PlantSetup,
    *,
    w1: float,
    w2: float,
    num_particles: int = 20,
    max_iter: int = 2000,
    stall_window: int = 100,
    seed: int = 0,
    omega: float | None = None,
    eta: float | None = None,
) -> SynthesisResult:
    """Run the swarm over the benchmark's gain box for the given weights."""
    params = PsoParams(
        bounds_lower=setup.bench.gain_bounds_lower,
        bounds_upper=setup.bench.gain_bounds_upper,
        num_particles=num_particles,
        max_iter=max_iter,
        stall_window=stall_window,
        seed=seed,
        omega=omega,
        eta=eta,
    )
    return synthesize(setup.context, params, fitness_spec(setup, w1, w2))


def evaluate_controller(setup: PlantSetup, ctrl: Controller) -> tuple[float, int]:
    """(cost metric, certified cells) of one gain under the setup's candidate."""
    report = lqr_cost_metric(setup.dsys, ctrl, setup.bench.cost)
    if not report.stable:
        return np.inf, 0
    return report.metric, setup.context.certified_size(ctrl, report.P)
