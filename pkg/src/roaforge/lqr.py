"""Discrete Lyapunov solver, LQR cost metric, and the baseline optimal gain.

The cost of a stabilizing gain K is summarized by lambda_max(P(K)), where
P(K) solves  A_cl' P A_cl - P + Q + K' R K = 0  for the closed loop
A_cl = A_tau - B_tau K.  Instability is encoded as an infinite metric, not an
exception, so swarm fitness stays total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Controller, DiscreteLinearSystem, SCHUR_MARGIN, closed_loop_matrix
from .errors import DareDivergenceError, NumericError, UnstableClosedLoopError
from .validation import check_spd, check_square, check_symmetric

LYAPUNOV_RESIDUAL_TOL = 1e-8
DARE_TOL = 1e-12
DARE_MAX_ITER = 100_000


@dataclass(frozen=True)
class CostWeights:
    """Symmetric positive-definite state and input weights."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", check_spd(self.Q, "Q"))
        object.__setattr__(self, "R", check_spd(self.R, "R"))


@dataclass(frozen=True)
class CostReport:
    """Cost summary for one gain: P is None when the loop is not Schur."""

    P: np.ndarray | None
    metric: float
    stable: bool


def solve_discrete_lyapunov(A_cl: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Solve  A_cl' P A_cl - P + M = 0  for the unique symmetric P.

    Solved directly through the Kronecker-product linear system; at the
    n <= 6 sizes used here that is trivially cheap and avoids any Schur
    decomposition machinery.  The solution is symmetrized and its residual
    checked against 1e-8 * (1 + ||M||).
    """
    A_cl = check_square(A_cl, "A_cl")
    M = check_symmetric(M, "M", tol=1e-9)
    spectral_radius = np.max(np.abs(np.linalg.eigvals(A_cl)))
    if spectral_radius >= 1.0 - SCHUR_MARGIN:
        raise UnstableClosedLoopError(
            f"closed loop has spectral radius {spectral_radius:.12f}; Lyapunov equation has no PD solution"
        )
    n = A_cl.shape[0]
    system = np.kron(A_cl.T, A_cl.T) - np.eye(n * n)
    p = np.linalg.solve(system, -M.reshape(-1))
    P = p.reshape(n, n)
    P = 0.5 * (P + P.T)
    residual = np.linalg.norm(A_cl.T @ P @ A_cl - P + M, "fro")
    bound = LYAPUNOV_RESIDUAL_TOL * (1.0 + np.linalg.norm(M, "fro"))
    if residual >= bound:
        raise NumericError(f"Lyapunov residual {residual:.3e} exceeds {bound:.3e}")
    return P


def lqr_cost_metric(dsys: DiscreteLinearSystem, ctrl: Controller, w: CostWeights) -> CostReport:
    """lambda_max of the closed-loop cost matrix P(K), or +inf when unstable.

    For symmetric positive-definite P the maximum eigenvalue equals the
    spectral norm, so this is the tight bound on the quadratic cost per unit
    of squared initial-state norm.
    """
    A_cl = closed_loop_matrix(dsys, ctrl)
    if np.max(np.abs(np.linalg.eigvals(A_cl))) >= 1.0 - SCHUR_MARGIN:
        return CostReport(P=None, metric=np.inf, stable=False)
    M = w.Q + ctrl.K.T @ w.R @ ctrl.K
    P = solve_discrete_lyapunov(A_cl, M)
    metric = float(np.linalg.eigvalsh(P)[-1])
    return CostReport(P=P, metric=metric, stable=True)


def dare_residual(dsys: DiscreteLinearSystem, w: CostWeights, P: np.ndarray) -> float:
    """Frobenius norm of the discrete algebraic Riccati residual at P."""
    A, B = dsys.A_tau, dsys.B_tau
    gain_term = A.T @ P @ B @ np.linalg.solve(w.R + B.T @ P @ B, B.T @ P @ A)
    return float(np.linalg.norm(w.Q + A.T @ P @ A - gain_term - P, "fro"))


def lqr_gain(dsys: DiscreteLinearSystem, w: CostWeights) -> Controller:
    """Optimal gain from the discrete Riccati equation by value iteration.

    Iterates P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA from P = Q until the
    Frobenius update drops below 1e-12, then K = (R + B'PB)^-1 B'PA.  Simple,
    and directly verifiable against the residual.
    """
    A, B = dsys.A_tau, dsys.B_tau
    P = w.Q.copy()
    # overflow of the iterates is the divergence signal, not an error state
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(DARE_MAX_ITER):
            BtP = B.T @ P
            gain = np.linalg.solve(w.R + BtP @ B, BtP @ A)
            P_next = w.Q + A.T @ P @ A - A.T @ P @ B @ gain
            P_next = 0.5 * (P_next + P_next.T)
            if not np.all(np.isfinite(P_next)):
                raise DareDivergenceError("Riccati iterates overflowed; the pair is not stabilizable")
            if np.linalg.norm(P_next - P, "fro") < DARE_TOL:
                P = P_next
                break
            P = P_next
        else:
            raise DareDivergenceError(f"Riccati iteration did not converge in {DARE_MAX_ITER} steps")
    K = np.linalg.solve(w.R + B.T @ P @ B, B.T @ P @ A)
    return Controller(K=K)
