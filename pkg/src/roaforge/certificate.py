"""State-space grid and certified region-of-attraction extraction.

Certification checks the grid-tightened decrease condition

    v(step(x)) - v(x) + L * mu < 0

at every cell center, where L bounds the Lipschitz constant of the decrease
over that cell and mu is the covering radius of the grid.  Cells are
certified in ascending order of v; the walk stops at the first failure and
the last passed value becomes the level-set threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Protocol

import numpy as np

from .dynamics import Controller, NonlinearSystem, RK4_SUBSTEPS, _rk4_hold, control_input
from .errors import ConfigError
from .validation import as_float_array, check_spd, check_state_batch, check_symmetric

# Cells whose centers fall within EXEMPTION_FACTOR * mu of the equilibrium are
# exempt from the tightened check: there |v(step(x)) - v(x)| is O(mu^2) while
# the L*mu slack is O(mu), so the margin cannot certify them, and local
# asymptotic stability already covers a neighborhood of the origin.
EXEMPTION_FACTOR = 10.0

StepMap = Callable[[np.ndarray], np.ndarray]


class LyapunovCandidate(Protocol):
    """Positive-definite function with a per-cell Lipschitz-bound service."""

    def evaluate(self, states: np.ndarray) -> np.ndarray:
        """v at each row of `states`, shape (N, n) -> (N,)."""
        ...

    def local_lipschitz(self, centers: np.ndarray, radius: float) -> np.ndarray:
        """Bound on the Lipschitz constant of v(step(x)) - v(x) per cell."""
        ...


@dataclass(frozen=True)
class StateGrid:
    """Uniform lattice of cell centers over a box containing the origin.

    Coordinates are equilibrium-shifted: the origin must lie strictly inside
    the box.  `mu`, half the cell diagonal, is the covering radius: no point
    of the box is farther than mu from its nearest center.
    """

    lower: np.ndarray
    upper: np.ndarray
    points_per_dim: tuple[int, ...]

    def __post_init__(self):
        lower = as_float_array(self.lower, "lower").reshape(-1)
        upper = as_float_array(self.upper, "upper").reshape(-1)
        points = tuple(int(p) for p in np.atleast_1d(self.points_per_dim))
        if lower.shape != upper.shape or len(points) != lower.size:
            raise ConfigError("lower, upper, and points_per_dim must agree in dimension")
        if not np.all(upper > lower):
            raise ConfigError("upper must exceed lower componentwise")
        if any(p < 3 for p in points):
            raise ConfigError("points_per_dim must be >= 3 in every dimension")
        if not (np.all(lower < 0.0) and np.all(upper > 0.0)):
            raise ConfigError("the equilibrium (origin) must lie inside the grid box")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points_per_dim", points)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def cell_widths(self) -> np.ndarray:
        return (self.upper - self.lower) / (np.asarray(self.points_per_dim) - 1)

    @property
    def mu(self) -> float:
        return 0.5 * float(np.sqrt(np.sum(self.cell_widths**2)))

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.points_per_dim))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(lo, hi, p)
            for lo, hi, p in zip(self.lower, self.upper, self.points_per_dim)
        )

    @cached_property
    def centers(self) -> np.ndarray:
        """All cell centers, shape (total_cells, dim), C-order flat indexing."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    @cached_property
    def center_norms(self) -> np.ndarray:
        return np.linalg.norm(self.centers, axis=1)


def build_grid(lower, upper, points_per_dim) -> StateGrid:
    """Construct a uniform grid; see StateGrid for the invariants enforced."""
    points = points_per_dim if np.iterable(points_per_dim) else [points_per_dim] * len(lower)
    return StateGrid(lower=np.asarray(lower), upper=np.asarray(upper), points_per_dim=tuple(points))


@dataclass(frozen=True)
class QuadraticCandidate:
    """v(x) = x' P x certified against the linear step x -> A_cl x.

    The decrease function is then the quadratic form x' N x with
    N = A_cl' P A_cl - P, which gives the per-cell Lipschitz bound
    2 ||N|| (||center|| + radius).
    """

    P: np.ndarray
    step_matrix: np.ndarray
    decrease_matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        P = check_spd(self.P, "P")
        A_cl = as_float_array(self.step_matrix, "step_matrix")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "step_matrix", A_cl)
        object.__setattr__(self, "decrease_matrix", A_cl.T @ P @ A_cl - P)

    def evaluate(self, states: np.ndarray) -> np.ndarray:
        X = check_state_batch(states, self.P.shape[0])
        return np.einsum("ni,ij,nj->n", X, self.P, X)

    def local_lipschitz(self, centers: np.ndarray, radius: float) -> np.ndarray:
        X = check_state_batch(centers, self.P.shape[0])
        return quadratic_local_lipschitz(self.decrease_matrix, X, radius)


def quadratic_local_lipschitz(N: np.ndarray, centers: np.ndarray, radius: float) -> np.ndarray:
    """Lipschitz bound 2 ||N|| (||center|| + radius) for x' N x over a cell.

    The gradient of the quadratic decrease is 2 N x, so its norm over a ball
    of the given radius around each center is at most this value.
    """
    N = check_symmetric(N, "N", tol=1e-9)
    X = np.atleast_2d(np.asarray(centers, dtype=float))
    norm_N = float(np.linalg.norm(N, 2))
    return 2.0 * norm_N * (np.linalg.norm(X, axis=1) + radius)


@dataclass(frozen=True)
class RoaEstimate:
    """Certified level set on a fixed grid.

    `certified_cells` holds sorted flat indices (C-order) into the grid.
    `certified` is False when nothing beyond the exemption ball passed.
    """

    threshold_c: float
    certified_cells: np.ndarray
    size_cells: int
    size_fraction: float
    certified: bool
    exemption_radius: float


def linear_step_map(A_cl: np.ndarray) -> StepMap:
    """Batch step map for the linear closed loop x -> A_cl x."""
    A_cl = as_float_array(A_cl, "A_cl")

    def step(states: np.ndarray) -> np.ndarray:
        return np.atleast_2d(states) @ A_cl.T

    return step


def nonlinear_step_map(sys: NonlinearSystem, ctrl: Controller, tau: float) -> StepMap:
    """Batch step map of the RK4-discretized saturated nonlinear closed loop.

    Used for validation cross-checks only; fitness always certifies against
    the linear map, which keeps it cheap.
    """

    def step(states: np.ndarray) -> np.ndarray:
        X = check_state_batch(states, sys.state_dim)
        out = np.empty_like(X)
        for i, x in enumerate(X):
            u = control_input(sys, ctrl, x)
            out[i] = _rk4_hold(sys.vector_field, x, u, tau, RK4_SUBSTEPS)
        return out

    return step


def decrease_margin(
    cand: LyapunovCandidate,
    step: StepMap,
    x: np.ndarray,
    L: float,
    mu: float,
) -> float:
    """Tightened decrease margin  v(step(x)) - v(x) + L * mu  at one state.

    Negative means the cell is certified; the expression is exactly linear
    in mu for fixed x and L.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    value = cand.evaluate(step(x))[0] - cand.evaluate(x)[0] + L * mu
    return float(value)


def _spot_check_positive(cand: LyapunovCandidate, grid: StateGrid) -> None:
    """Cheap sampled positivity check of the candidate away from the origin."""
    stride = max(1, grid.total_cells // 16)
    sample = grid.centers[::stride]
    norms = np.linalg.norm(sample, axis=1)
    values = cand.evaluate(sample)
    bad = (norms > 1e-9) & (values <= 0.0)
    if bad.any():
        where = sample[np.argmax(bad)]
        raise ValueError(f"candidate is not positive at sampled state {where}")


def level_set_cells(cand: LyapunovCandidate, grid: StateGrid, c: float) -> np.ndarray:
    """Flat indices of grid cells with v(center) < c."""
    values = cand.evaluate(grid.centers)
    return np.flatnonzero(values < c)


def certify_roa(
    cand: LyapunovCandidate,
    step: StepMap,
    grid: StateGrid,
    exemption_radius: float | None = None,
) -> RoaEstimate:
    """Largest certified sublevel set of the candidate on the grid.

    Cells inside the exemption ball are certified outright.  The remaining
    cells are visited in ascending v (ties broken by flat index); margins are
    evaluated for all cells up front, then a sequential scan stops at the
    first failure.  The threshold is the v value at the stopping cell, or the
    maximum v over the box when nothing fails, in which case the whole box is
    certified.
    """
    mu = grid.mu
    r0 = EXEMPTION_FACTOR * mu if exemption_radius is None else float(exemption_radius)
    centers = grid.centers
    _spot_check_positive(cand, grid)
    # inclusive ball membership, robust to lattice round-off at the boundary
    exempt = grid.center_norms <= r0 + 1e-12 * (1.0 + r0)

    values = cand.evaluate(centers)
    margins = cand.evaluate(step(centers)) - values + cand.local_lipschitz(centers, mu) * mu

    order = np.lexsort((np.arange(grid.total_cells), values))
    walk = order[~exempt[order]]
    failed = margins[walk] >= 0.0

    if not failed.any():
        threshold = float(values.max())
        passed = walk
    else:
        stop = int(np.argmax(failed))
        threshold = float(values[walk[stop]])
        ahead = walk[:stop]
        passed = ahead[values[ahead] < threshold]

    certified_cells = np.union1d(np.flatnonzero(exempt), passed)
    return RoaEstimate(
        threshold_c=threshold,
        certified_cells=certified_cells,
        size_cells=int(certified_cells.size),
        size_fraction=float(certified_cells.size / grid.total_cells),
        certified=bool(passed.size > 0),
        exemption_radius=r0,
    )


def roa_size(est: RoaEstimate) -> int:
    """Canonical size measure: the certified cell count on the fixed grid."""
    return est.size_cells
