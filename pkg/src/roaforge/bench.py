"""Benchmark plants with documented defaults, plus the experiment protocols.

Physical and cost parameters here are repo defaults (see the parameter
ledger in the README); the gain search ranges are fixed per benchmark and
must not be edited casually, since the experiment protocols assume them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import pipeline
from .certificate import build_grid, certify_roa, linear_step_map, QuadraticCandidate
from .dynamics import NonlinearSystem
from .errors import ConfigError
from .lqr import CostWeights, lqr_cost_metric
from .validation import as_float_array

GRAVITY = 9.81

BENCHMARK_NAMES = ("pendulum_a", "pendulum_b", "vehicle_steering", "aircraft_pitch")

# Default weights for the co-optimized gain.  On the normalized fitness the
# cost term spans orders of magnitude while the certified-size term spans
# roughly one, so equal weights collapse the co-optimized gain onto the LQR
# gain; this ratio makes the trade-off actually bite.  Overridable everywhere.
DEFAULT_CO_WEIGHTS = (1.0, 5.0)


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    plant: NonlinearSystem
    cost: CostWeights
    gain_bounds_lower: np.ndarray
    gain_bounds_upper: np.ndarray
    roa_domain_lower: np.ndarray
    roa_domain_upper: np.ndarray
    default_grid_points: int = 250

    def __post_init__(self):
        for attr in ("gain_bounds_lower", "gain_bounds_upper", "roa_domain_lower", "roa_domain_upper"):
            object.__setattr__(self, attr, as_float_array(getattr(self, attr), attr).reshape(-1))


def pendulum(
    mass: float,
    length: float,
    friction: float,
    input_limit: float | None = 1.0,
    name: str = "pendulum_a",
    gain_bounds=((-10.0, -5.0), (10.0, 5.0)),
) -> BenchmarkSpec:
    """Inverted pendulum about its upright equilibrium.

    Point-mass inertia I = m l^2; the angle is measured from upright, so the
    equilibrium is the origin with zero input.
    """
    if mass <= 0 or length <= 0 or friction < 0:
        raise ConfigError("mass and length must be > 0, friction >= 0")
    inertia = mass * length * length
    g_over_l = GRAVITY / length
    damping = friction / inertia

    def field(x, u):
        phi, omega = x
        return np.array([omega, g_over_l * np.sin(phi) - damping * omega + u[0] / inertia])

    def jac(x, u):
        phi, _ = x
        A = np.array([[0.0, 1.0], [g_over_l * np.cos(phi), -damping]])
        B = np.array([[0.0], [1.0 / inertia]])
        return A, B

    plant = NonlinearSystem(
        state_dim=2,
        input_dim=1,
        vector_field=field,
        jacobian=jac,
        equilibrium_state=np.zeros(2),
        equilibrium_input=np.zeros(1),
        input_limit=input_limit,
    )
    return BenchmarkSpec(
        name=name,
        plant=plant,
        cost=CostWeights(Q=np.diag([5.0, 0.6]), R=np.array([[1.0]])),
        gain_bounds_lower=np.asarray(gain_bounds[0]),
        gain_bounds_upper=np.asarray(gain_bounds[1]),
        roa_domain_lower=np.array([-2.0 * np.pi / 3.0, -8.0]),
        roa_domain_upper=np.array([2.0 * np.pi / 3.0, 8.0]),
    )


def pendulum_a() -> BenchmarkSpec:
    """Light short pendulum: m = 0.15 kg, l = 0.5 m, mu = 0.05, |u| <= 1."""
    return pendulum(mass=0.15, length=0.5, friction=0.05)


def pendulum_b() -> BenchmarkSpec:
    """Heavy long pendulum: m = 0.5 kg, l = 1.0 m, mu = 0.05, |u| <= 2.5."""
    return pendulum(
        mass=0.5,
        length=1.0,
        friction=0.05,
        input_limit=2.5,
        name="pendulum_b",
        gain_bounds=((5.0, -2.0), (20.0, 12.0)),
    )


def vehicle_steering() -> BenchmarkSpec:
    """Single-track lateral steering model about straight-line driving.

    States are lateral offset and heading, input the front-wheel angle.
    Defaults: speed 5 m/s, wheelbase 2 m, center of gravity mid-wheelbase
    (velocity-vector angle = arctan(0.5 tan(delta))).
    """
    speed = 5.0
    wheelbase = 2.0
    cg_ratio = 0.5

    def field(x, u):
        _, theta = x
        delta = u[0]
        alpha = np.arctan(cg_ratio * np.tan(delta))
        return np.array([speed * np.sin(theta + alpha), speed / wheelbase * np.tan(delta)])

    def jac(x, u):
        _, theta = x
        delta = u[0]
        alpha = np.arctan(cg_ratio * np.tan(delta))
        sec2 = 1.0 / np.cos(delta) ** 2
        dalpha = cg_ratio * sec2 / (1.0 + (cg_ratio * np.tan(delta)) ** 2)
        A = np.array([[0.0, speed * np.cos(theta + alpha)], [0.0, 0.0]])
        B = np.array([[speed * np.cos(theta + alpha) * dalpha], [speed / wheelbase * sec2]])
        return A, B

    plant = NonlinearSystem(
        state_dim=2,
        input_dim=1,
        vector_field=field,
        jacobian=jac,
        equilibrium_state=np.zeros(2),
        equilibrium_input=np.zeros(1),
        input_limit=None,
    )
    return BenchmarkSpec(
        name="vehicle_steering",
        plant=plant,
        cost=CostWeights(Q=np.eye(2), R=np.array([[0.1]])),
        gain_bounds_lower=np.array([0.0, 0.0]),
        gain_bounds_upper=np.array([17.0, 11.0]),
        roa_domain_lower=np.array([-3.0, -1.0]),
        roa_domain_upper=np.array([3.0, 1.0]),
    )


def aircraft_pitch() -> BenchmarkSpec:
    """Longitudinal pitch dynamics at steady cruise, elevator input.

    Linear by construction at the cruise trim (thrust, weight, and lift in
    balance).  States: angle of attack, pitch rate, pitch angle; the pitch
    angle integrates the pitch rate exactly.  Stability-derivative defaults
    (lift slope -3.0, pitch stiffness -8.0, pitch damping -2.5, elevator
    moment gain 1.0 with trailing-edge-up positive) describe a responsive
    trainer-class airframe; see the parameter ledger.
    """
    A = np.array(
        [
            [-3.0, 1.0, 0.0],
            [-8.0, -2.5, 0.0],
            [0.0, 1.0, 0.0],
        ]
    )
    B = np.array([[0.0], [1.0], [0.0]])

    def field(x, u):
        return A @ x + B @ u

    def jac(x, u):
        return A, B

    plant = NonlinearSystem(
        state_dim=3,
        input_dim=1,
        vector_field=field,
        jacobian=jac,
        equilibrium_state=np.zeros(3),
        equilibrium_input=np.zeros(1),
        input_limit=None,
    )
    return BenchmarkSpec(
        name="aircraft_pitch",
        plant=plant,
        cost=CostWeights(Q=np.diag([1.0, 1.0, 100.0]), R=np.array([[0.01]])),
        gain_bounds_lower=np.array([-1.0, 10.0, 0.0]),
        gain_bounds_upper=np.array([5.0, 100.0, 7.0]),
        roa_domain_lower=np.array([-0.5, -0.5, -0.5]),
        roa_domain_upper=np.array([0.5, 0.5, 0.5]),
    )


_FACTORIES = {
    "pendulum_a": pendulum_a,
    "pendulum_b": pendulum_b,
    "vehicle_steering": vehicle_steering,
    "aircraft_pitch": aircraft_pitch,
}


def by_name(name: str) -> BenchmarkSpec:
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise ConfigError(f"unknown benchmark {name!r}; choose from {BENCHMARK_NAMES}") from None


def experiment_compare(
    spec: BenchmarkSpec,
    particle_counts,
    *,
    run_count: int = 5,
    base_seed: int = 0,
    tau: float = 0.01,
    grid_points: int = 101,
    candidate_kind: str = "quadratic",
    max_iter: int = 2000,
    stall_window: int = 100,
    co_weights: tuple[float, float] = DEFAULT_CO_WEIGHTS,
) -> list[dict]:
    """Percentage cost/ROA deltas of the synthesized gains versus the LQR gain.

    For each particle count, synthesizes the ROA-only gain (weights 0/1) and
    the co-optimized gain, repeats over `run_count` seeds, and averages.
    """
    setup = pipeline.prepare(spec, tau=tau, grid_points=grid_points, candidate_kind=candidate_kind)
    rows: list[dict] = []
    for count in particle_counts:
        rows.append(
            {"particles": int(count), "controller": "K_LQR", "pct_cost_increase": 0.0, "pct_roa_increase": 0.0}
        )
        deltas = {"K_O": [], "K_max": []}
        for run in range(run_count):
            seed = base_seed + run
            for label, (w1, w2) in (("K_O", co_weights), ("K_max", (0.0, 1.0))):
                result = pipeline.synthesize_gain(
                    setup,
                    w1=w1,
                    w2=w2,
                    num_particles=int(count),
                    max_iter=max_iter,
                    stall_window=stall_window,
                    seed=seed,
                )
                cost, size = pipeline.evaluate_controller(setup, result.gbest)
                deltas[label].append(
                    (
                        100.0 * (cost - setup.baseline_cost) / setup.baseline_cost,
                        100.0 * (size - setup.baseline_roa) / setup.baseline_roa,
                    )
                )
        for label in ("K_O", "K_max"):
            arr = np.asarray(deltas[label])
            rows.append(
                {
                    "particles": int(count),
                    "controller": label,
                    "pct_cost_increase": float(arr[:, 0].mean()),
                    "pct_roa_increase": float(arr[:, 1].mean()),
                }
            )
    return rows


def experiment_mass_sweep(
    masses,
    *,
    length: float = 0.5,
    friction: float = 0.05,
    tau: float = 0.01,
    grid_points: int = 101,
    candidate_kind: str = "quadratic",
    num_particles: int = 10,
    max_iter: int = 2000,
    stall_window: int = 100,
    seed: int = 0,
    co_weights: tuple[float, float] = DEFAULT_CO_WEIGHTS,
) -> list[dict]:
    """Certified ROA of the co-optimized gain for pendulums of varying mass."""
    rows: list[dict] = []
    for mass in masses:
        if not 0.1 <= mass <= 0.7:
            raise ConfigError(f"mass {mass} outside the supported range [0.1, 0.7] kg")
        spec = pendulum(mass=float(mass), length=length, friction=friction)
        setup = pipeline.prepare(spec, tau=tau, grid_points=grid_points, candidate_kind=candidate_kind)
        result = pipeline.synthesize_gain(
            setup,
            w1=co_weights[0],
            w2=co_weights[1],
            num_particles=num_particles,
            max_iter=max_iter,
            stall_window=stall_window,
            seed=seed,
        )
        _, size = pipeline.evaluate_controller(setup, result.gbest)
        rows.append({"mass_kg": float(mass), "roa_cells": int(size)})
    return rows


def experiment_grid_sweep(
    spec: BenchmarkSpec,
    points_per_dim,
    *,
    tau: float = 0.01,
    timing_repeats: int = 5,
) -> list[dict]:
    """Certified size and certification wall-clock of the LQR gain per resolution."""
    setup = pipeline.prepare(spec, tau=tau, grid_points=int(points_per_dim[0]), candidate_kind="quadratic")
    report = lqr_cost_metric(setup.dsys, setup.lqr_controller, spec.cost)
    A_cl = setup.dsys.A_tau - setup.dsys.B_tau @ setup.lqr_controller.K
    cand = QuadraticCandidate(P=report.P, step_matrix=A_cl)
    step = linear_step_map(A_cl)

    rows: list[dict] = []
    for points in points_per_dim:
        if int(points) < 3:
            raise ConfigError("grid resolutions must be >= 3 points per dimension")
        grid = build_grid(spec.roa_domain_lower, spec.roa_domain_upper, [int(points)] * spec.plant.state_dim)
        grid.centers  # materialize outside the timed region
        best = np.inf
        for _ in range(timing_repeats):
            start = time.perf_counter()
            est = certify_roa(cand, step, grid)
            best = min(best, time.perf_counter() - start)
        rows.append({"points_per_dim": int(points), "roa_cells": int(est.size_cells), "seconds": float(best)})
    return rows


def with_mass(spec: BenchmarkSpec, mass: float) -> BenchmarkSpec:
    """Rebuild a pendulum benchmark with a different bob mass."""
    if spec.name not in ("pendulum_a", "pendulum_b"):
        raise ConfigError("mass overrides only apply to the pendulum benchmarks")
    length = 0.5 if spec.name == "pendulum_a" else 1.0
    fresh = pendulum(
        mass=mass,
        length=length,
        friction=0.05,
        input_limit=spec.plant.input_limit,
        name=spec.name,
        gain_bounds=(tuple(spec.gain_bounds_lower), tuple(spec.gain_bounds_upper)),
    )
    return replace(fresh, cost=spec.cost)
