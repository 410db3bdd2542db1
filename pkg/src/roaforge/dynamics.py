"""Plant models, linearization, exact discretization, and closed-loop simulation.

Everything here is a pure function of its inputs; all container types are
frozen dataclasses and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, NumericError
from .validation import as_float_array, check_square, check_vector

EQUILIBRIUM_TOL = 1e-9
SCHUR_MARGIN = 1e-9
DIVERGENCE_LIMIT = 1e6
RK4_SUBSTEPS = 10

# Truncation order for the scaled exponential series.  After scaling so that
# ||A t / 2^s|| <= 1/2, the tail beyond k = 16 is below 1e-19.
_EXP_SERIES_TERMS = 17

VectorField = Callable[[np.ndarray, np.ndarray], np.ndarray]
Jacobian = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class NonlinearSystem:
    """Continuous-time plant  d/dt x = f(x, u)  with a known equilibrium pair.

    `jacobian`, when given, returns the pair (df/dx, df/du) evaluated at a
    state/input pair.  `input_limit` is a symmetric saturation bound applied
    only in simulation, never in the linear certificate map.
    """

    state_dim: int
    input_dim: int
    vector_field: VectorField
    equilibrium_state: np.ndarray
    equilibrium_input: np.ndarray
    jacobian: Jacobian | None = None
    input_limit: float | None = None

    def __post_init__(self):
        if self.state_dim < 1 or self.input_dim < 1:
            raise DimensionError("state_dim and input_dim must be >= 1")
        xe = check_vector(self.equilibrium_state, self.state_dim, "equilibrium_state")
        ue = check_vector(self.equilibrium_input, self.input_dim, "equilibrium_input")
        object.__setattr__(self, "equilibrium_state", xe)
        object.__setattr__(self, "equilibrium_input", ue)
        if self.input_limit is not None and self.input_limit < 0:
            raise ValueError("input_limit must be >= 0")
        residual = np.linalg.norm(np.asarray(self.vector_field(xe, ue), dtype=float))
        if residual >= EQUILIBRIUM_TOL:
            raise ValueError(f"equilibrium residual {residual:.3e} exceeds {EQUILIBRIUM_TOL}")


@dataclass(frozen=True)
class LinearSystem:
    """Continuous-time linearization  d/dt x = A x + B u."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = check_square(self.A, "A")
        B = as_float_array(self.B, "B")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise DimensionError(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class DiscreteLinearSystem:
    """Zero-order-hold discretization  x[r+1] = A_tau x[r] + B_tau u[r]."""

    A_tau: np.ndarray
    B_tau: np.ndarray
    tau: float

    def __post_init__(self):
        A = check_square(self.A_tau, "A_tau")
        B = as_float_array(self.B_tau, "B_tau")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise DimensionError(f"B_tau must have {A.shape[0]} rows, got shape {B.shape}")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        object.__setattr__(self, "A_tau", A)
        object.__setattr__(self, "B_tau", B)

    @property
    def state_dim(self) -> int:
        return self.A_tau.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B_tau.shape[1]


@dataclass(frozen=True)
class Controller:
    """Linear state feedback  u = -K x  (in equilibrium-shifted coordinates)."""

    K: np.ndarray

    def __post_init__(self):
        K = as_float_array(self.K, "K")
        if K.ndim != 2:
            raise DimensionError(f"K must be a 2-D gain matrix, got shape {np.shape(self.K)}")
        object.__setattr__(self, "K", K)

    @property
    def input_dim(self) -> int:
        return self.K.shape[0]

    @property
    def state_dim(self) -> int:
        return self.K.shape[1]


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run.  `inputs[r]` is the input held on [t_r, t_r+tau)."""

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    diverged: bool = False


def matrix_exp(A: np.ndarray, t: float) -> np.ndarray:
    """Evaluate exp(A t) by scaling-and-squaring of the truncated power series."""
    A = check_square(A, "A")
    if t < 0:
        raise ValueError("t must be >= 0")
    n = A.shape[0]
    M = A * t
    norm = np.linalg.norm(M, np.inf)
    if norm == 0.0:
        return np.eye(n)
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5))))
    M = M / (2.0**squarings)
    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, _EXP_SERIES_TERMS):
        term = term @ M / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def linearize(sys: NonlinearSystem) -> LinearSystem:
    """Jacobian linearization at the equilibrium pair.

    Uses the analytic Jacobian when the plant provides one, otherwise central
    finite differences with a per-component step 1e-6 * (1 + |component|).
    """
    xe, ue = sys.equilibrium_state, sys.equilibrium_input
    if sys.jacobian is not None:
        A, B = sys.jacobian(xe, ue)
        return LinearSystem(np.asarray(A, dtype=float), np.asarray(B, dtype=float))

    f = sys.vector_field
    n, m = sys.state_dim, sys.input_dim
    A = np.empty((n, n))
    for j in range(n):
        h = 1e-6 * (1.0 + abs(xe[j]))
        xp, xm = xe.copy(), xe.copy()
        xp[j] += h
        xm[j] -= h
        A[:, j] = (np.asarray(f(xp, ue)) - np.asarray(f(xm, ue))) / (2.0 * h)
    B = np.empty((n, m))
    for j in range(m):
        h = 1e-6 * (1.0 + abs(ue[j]))
        up, um = ue.copy(), ue.copy()
        up[j] += h
        um[j] -= h
        B[:, j] = (np.asarray(f(xe, up)) - np.asarray(f(xe, um))) / (2.0 * h)
    return LinearSystem(A, B)


def discretize(lin: LinearSystem, tau: float) -> DiscreteLinearSystem:
    """Exact zero-order-hold discretization via the augmented-matrix exponential.

    exp(tau * [[A, B], [0, 0]]) carries A_tau in the upper-left block and the
    hold integral of exp(A s) B in the upper-right block, with no quadrature
    tolerance involved.
    """
    if not tau > 0:
        raise ValueError("tau must be > 0")
    n, m = lin.state_dim, lin.input_dim
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = lin.A
    aug[:n, n:] = lin.B
    phi = matrix_exp(aug, tau)
    return DiscreteLinearSystem(phi[:n, :n], phi[:n, n:], tau)


def closed_loop_matrix(dsys: DiscreteLinearSystem, ctrl: Controller) -> np.ndarray:
    if ctrl.K.shape != (dsys.input_dim, dsys.state_dim):
        raise DimensionError(
            f"gain shape {ctrl.K.shape} does not match plant "
            f"({dsys.input_dim}, {dsys.state_dim})"
        )
    return dsys.A_tau - dsys.B_tau @ ctrl.K


def step_linear(dsys: DiscreteLinearSystem, ctrl: Controller, x: np.ndarray) -> np.ndarray:
    """One closed-loop step of the discrete linearization."""
    x = check_vector(x, dsys.state_dim, "x")
    return closed_loop_matrix(dsys, ctrl) @ x


def is_schur(dsys: DiscreteLinearSystem, ctrl: Controller) -> bool:
    """True iff every closed-loop eigenvalue has modulus < 1 - 1e-9.

    The strict margin keeps marginally stable loops produced by swarm
    boundary particles out of the certified set.
    """
    A_cl = closed_loop_matrix(dsys, ctrl)
    try:
        eigs = np.linalg.eigvals(A_cl)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration failed: {exc}") from exc
    # ties at the margin boundary count as not Schur
    return bool(np.max(np.abs(eigs)) < 1.0 - SCHUR_MARGIN - 1e-12)


def _rk4_hold(f: VectorField, x: np.ndarray, u: np.ndarray, dt: float, substeps: int) -> np.ndarray:
    h = dt / substeps
    for _ in range(substeps):
        k1 = np.asarray(f(x, u), dtype=float)
        k2 = np.asarray(f(x + 0.5 * h * k1, u), dtype=float)
        k3 = np.asarray(f(x + 0.5 * h * k2, u), dtype=float)
        k4 = np.asarray(f(x + h * k3, u), dtype=float)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def control_input(sys: NonlinearSystem, ctrl: Controller, x: np.ndarray) -> np.ndarray:
    """Saturated feedback  u = clamp(-K (x - xe) + ue)  in plant coordinates."""
    u = -ctrl.K @ (x - sys.equilibrium_state) + sys.equilibrium_input
    if sys.input_limit is not None:
        u = np.clip(u, -sys.input_limit, sys.input_limit)
    return u


def simulate(
    sys: NonlinearSystem,
    ctrl: Controller,
    x0: np.ndarray,
    tau: float,
    steps: int,
) -> Trajectory:
    """Zero-order-hold closed loop integrated with fixed-step RK4.

    Ten substeps per sample keep runs bit-reproducible across platforms.
    A state norm above 1e6 truncates the trajectory and sets the divergence
    flag instead of raising.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not tau > 0:
        raise ValueError("tau must be > 0")
    x = check_vector(x0, sys.state_dim, "x0")

    times = [0.0]
    states = [x.copy()]
    inputs = [control_input(sys, ctrl, x)]
    diverged = False
    for r in range(steps):
        x = _rk4_hold(sys.vector_field, x, inputs[-1], tau, RK4_SUBSTEPS)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_LIMIT:
            diverged = True
            break
        times.append((r + 1) * tau)
        states.append(x.copy())
        inputs.append(control_input(sys, ctrl, x))
    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        inputs=np.asarray(inputs),
        diverged=diverged,
    )
