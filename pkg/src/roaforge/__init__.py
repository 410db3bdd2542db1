"""Feedback-gain synthesis co-optimizing LQR cost and certified ROA."""

from .bench import BenchmarkSpec, aircraft_pitch, by_name, pendulum, pendulum_a, pendulum_b, vehicle_steering
from .certificate import (
    QuadraticCandidate,
    RoaEstimate,
    StateGrid,
    build_grid,
    certify_roa,
    decrease_margin,
    linear_step_map,
    nonlinear_step_map,
    roa_size,
)
from .dynamics import (
    Controller,
    DiscreteLinearSystem,
    LinearSystem,
    NonlinearSystem,
    Trajectory,
    discretize,
    is_schur,
    linearize,
    matrix_exp,
    simulate,
    step_linear,
)
from .estimators import RoaRegionEstimator, SwarmGainSynthesizer
from .lqr import CostReport, CostWeights, lqr_cost_metric, lqr_gain, solve_discrete_lyapunov
from .lyapunov_nn import (
    LyapunovNet,
    NeuralCandidate,
    TrainConfig,
    TrainResult,
    load_net,
    net_eval,
    net_gradient,
    net_init,
    nn_local_lipschitz,
    save_net,
    train,
)
from .pipeline import PlantContext, PlantSetup, evaluate_controller, prepare, synthesize_gain
from .pso import FitnessSpec, PsoParams, SynthesisResult, fitness, swarm_minimize, synthesize

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSpec",
    "Controller",
    "CostReport",
    "CostWeights",
    "DiscreteLinearSystem",
    "FitnessSpec",
    "LinearSystem",
    "LyapunovNet",
    "NeuralCandidate",
    "NonlinearSystem",
    "PlantContext",
    "PlantSetup",
    "PsoParams",
    "QuadraticCandidate",
    "RoaEstimate",
    "RoaRegionEstimator",
    "StateGrid",
    "SwarmGainSynthesizer",
    "SynthesisResult",
    "TrainConfig",
    "TrainResult",
    "Trajectory",
    "aircraft_pitch",
    "build_grid",
    "by_name",
    "certify_roa",
    "decrease_margin",
    "discretize",
    "evaluate_controller",
    "fitness",
    "is_schur",
    "linear_step_map",
    "linearize",
    "load_net",
    "lqr_cost_metric",
    "lqr_gain",
    "matrix_exp",
    "net_eval",
    "net_gradient",
    "net_init",
    "nn_local_lipschitz",
    "nonlinear_step_map",
    "pendulum",
    "pendulum_a",
    "pendulum_b",
    "prepare",
    "roa_size",
    "save_net",
    "simulate",
    "solve_discrete_lyapunov",
    "step_linear",
    "swarm_minimize",
    "synthesize",
    "synthesize_gain",
    "train",
    "vehicle_steering",
]
