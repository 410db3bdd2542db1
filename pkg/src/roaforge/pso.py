"""Deterministic particle swarm over gain space.

The velocity update uses the deterministic variant in which both random
multipliers are fixed at 1/2, collapsing the pbest/gbest attractions into a
single pull toward their midpoint:

    v' = omega * v + eta * ((pbest + gbest) / 2 - x)
    x' = x + v'            (position and velocity coefficients fixed at 1)

All randomness (initialization, parameter-pair choice) flows from one seed,
so identical seeds give byte-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import Controller
from .errors import ConfigError, NoStableSeedError
from .validation import as_float_array

# Tuning pairs <omega, eta>; chosen with equal probability per run seed when
# the params leave them unset.
PARAMETER_PAIRS = ((0.7, 1.6), (0.33, 2.35))

STALL_TOL = 1e-12
MAX_INIT_ATTEMPTS = 10


@dataclass(frozen=True)
class PsoParams:
    """Swarm configuration over a box-bounded search space."""

    bounds_lower: np.ndarray
    bounds_upper: np.ndarray
    num_particles: int = 20
    max_iter: int = 2000
    stall_window: int = 100
    seed: int = 0
    omega: float | None = None
    eta: float | None = None
    gamma: float = 1.0
    delta: float = 1.0

    def __post_init__(self):
        lower = as_float_array(self.bounds_lower, "bounds_lower").reshape(-1)
        upper = as_float_array(self.bounds_upper, "bounds_upper").reshape(-1)
        if lower.shape != upper.shape or not np.all(lower < upper):
            raise ConfigError("bounds_lower must be componentwise below bounds_upper")
        if self.num_particles < 2:
            raise ConfigError("num_particles must be >= 2")
        if self.max_iter < 1 or self.stall_window < 1:
            raise ConfigError("max_iter and stall_window must be >= 1")
        if (self.omega is None) != (self.eta is None):
            raise ConfigError("omega and eta must be set together or both left unset")
        object.__setattr__(self, "bounds_lower", lower)
        object.__setattr__(self, "bounds_upper", upper)

    @property
    def dim(self) -> int:
        return self.bounds_lower.size


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    pbest: np.ndarray
    pbest_fitness: float


def update_velocity(p: Particle, gbest: np.ndarray, params: PsoParams, omega: float, eta: float) -> np.ndarray:
    """Deterministic velocity update toward the pbest/gbest midpoint."""
    rho = 0.5 * (p.pbest + gbest)
    return omega * p.velocity + eta * (rho - p.position)


def update_position(p: Particle, new_velocity: np.ndarray, params: PsoParams) -> tuple[np.ndarray, np.ndarray]:
    """Advance and clamp into bounds; clamped components zero their velocity."""
    position = params.gamma * p.position + params.delta * new_velocity
    velocity = new_velocity.copy()
    low = position < params.bounds_lower
    high = position > params.bounds_upper
    position = np.clip(position, params.bounds_lower, params.bounds_upper)
    velocity[low | high] = 0.0
    return position, velocity


@dataclass(frozen=True)
class MinimizeResult:
    gbest: np.ndarray
    gbest_fitness: float
    gbest_aux: tuple
    history: tuple
    iterations_run: int
    terminated_by: str
    omega: float
    eta: float
    pbest_fitness: tuple = ()


# Objective returning (fitness, auxiliary record kept alongside the best).
Objective = Callable[[np.ndarray], tuple[float, tuple]]


def resolve_pair(params: PsoParams, rng: np.random.Generator) -> tuple[float, float]:
    if params.omega is not None:
        return float(params.omega), float(params.eta)
    return PARAMETER_PAIRS[int(rng.integers(0, len(PARAMETER_PAIRS)))]


def swarm_minimize(objective: Objective, params: PsoParams) -> MinimizeResult:
    """Run the deterministic swarm on an arbitrary objective.

    Initial positions are uniform in the bounds and initial velocities
    uniform in +-(upper - lower)/2.  If every particle of an initialization
    evaluates to +inf the swarm is resampled, up to 10 times.  Terminates at
    max_iter or once gbest has not changed (to 1e-12) for stall_window
    consecutive iterations.
    """
    rng = np.random.default_rng(params.seed)
    omega, eta = resolve_pair(params, rng)
    lower, upper = params.bounds_lower, params.bounds_upper
    span = upper - lower

    for _ in range(MAX_INIT_ATTEMPTS):
        positions = rng.uniform(lower, upper, size=(params.num_particles, params.dim))
        velocities = rng.uniform(-span / 2.0, span / 2.0, size=(params.num_particles, params.dim))
        evals = [objective(x) for x in positions]
        if any(np.isfinite(f) for f, _ in evals):
            break
    else:
        raise NoStableSeedError(
            f"no finite-fitness particle found in {MAX_INIT_ATTEMPTS} initializations"
        )

    particles = [
        Particle(position=x.copy(), velocity=v.copy(), pbest=x.copy(), pbest_fitness=f)
        for x, v, (f, _) in zip(positions, velocities, evals)
    ]
    aux_best = [aux for _, aux in evals]
    g_idx = int(np.argmin([p.pbest_fitness for p in particles]))
    gbest = particles[g_idx].pbest.copy()
    gbest_fitness = particles[g_idx].pbest_fitness
    gbest_aux = aux_best[g_idx]

    history = [(gbest_fitness, *gbest_aux)]
    stall = 0
    iterations = 0
    terminated_by = "max_iter"
    for _ in range(params.max_iter):
        iterations += 1
        previous = gbest_fitness
        for k, p in enumerate(particles):
            velocity = update_velocity(p, gbest, params, omega, eta)
            p.position, p.velocity = update_position(p, velocity, params)
            f, aux = objective(p.position)
            if f < p.pbest_fitness:
                p.pbest = p.position.copy()
                p.pbest_fitness = f
                aux_best[k] = aux
                if f < gbest_fitness:
                    gbest = p.pbest.copy()
                    gbest_fitness = f
                    gbest_aux = aux
        history.append((gbest_fitness, *gbest_aux))
        stall = stall + 1 if abs(gbest_fitness - previous) <= STALL_TOL else 0
        if stall >= params.stall_window:
            terminated_by = "stall"
            break

    return MinimizeResult(
        gbest=gbest,
        gbest_fitness=gbest_fitness,
        gbest_aux=gbest_aux,
        history=tuple(history),
        iterations_run=iterations,
        terminated_by=terminated_by,
        omega=omega,
        eta=eta,
        pbest_fitness=tuple(p.pbest_fitness for p in particles),
    )


@dataclass(frozen=True)
class FitnessSpec:
    """Weights and normalization baselines for the scalarized objective."""

    w1: float
    w2: float
    baseline_cost: float
    baseline_roa: float
    candidate_kind: str = "quadratic"

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0 or self.w1 + self.w2 <= 0:
            raise ConfigError("weights must be nonnegative with w1 + w2 > 0")
        if not (self.baseline_cost > 0 and self.baseline_roa > 0):
            raise ConfigError("baselines must be positive")
        if self.candidate_kind not in ("quadratic", "neural"):
            raise ConfigError("candidate_kind must be 'quadratic' or 'neural'")


def fitness(ctrl: Controller, spec: FitnessSpec, context) -> float:
    """Scalarized objective  w1 * cost/cost_lqr - w2 * roa/roa_lqr.

    Destabilizing gains map to +inf so the swarm loop stays total.  The
    normalization makes the weights dimensionless and pins the identity
    fitness(K_lqr) = w1 - w2.
    """
    value, _, _ = context.evaluate(ctrl, spec)
    return value


@dataclass(frozen=True)
class SynthesisResult:
    """Outcome of one synthesis run, including the per-iteration history.

    History rows are (gbest fitness, normalized cost term, normalized roa
    term); the fitness column is non-increasing by construction.
    """

    gbest: Controller
    gbest_fitness: float
    gbest_cost_metric: float
    gbest_roa_cells: int
    history: tuple
    iterations_run: int
    terminated_by: str
    omega: float
    eta: float
    seed: int


def synthesize(context, params: PsoParams, spec: FitnessSpec) -> SynthesisResult:
    """Run the swarm over gain space against the plant context's fitness."""
    m, n = context.gain_shape
    if params.dim != m * n:
        raise ConfigError(f"bounds dimension {params.dim} does not match gain size {m * n}")

    def objective(vec: np.ndarray) -> tuple[float, tuple]:
        ctrl = Controller(K=vec.reshape(m, n))
        value, cost_norm, roa_norm = context.evaluate(ctrl, spec)
        return value, (cost_norm, roa_norm)

    result = swarm_minimize(objective, params)
    gbest_ctrl = Controller(K=result.gbest.reshape(m, n))
    cost_norm, roa_norm = result.gbest_aux
    return SynthesisResult(
        gbest=gbest_ctrl,
        gbest_fitness=result.gbest_fitness,
        gbest_cost_metric=cost_norm * spec.baseline_cost,
        gbest_roa_cells=int(round(roa_norm * spec.baseline_roa)),
        history=result.history,
        iterations_run=result.iterations_run,
        terminated_by=result.terminated_by,
        omega=result.omega,
        eta=result.eta,
        seed=params.seed,
    )
