"""Exception types shared across the package.

The CLI maps these onto process exit codes, so the split matters:
configuration problems are user errors, the rest are numeric failures.
"""


class ConfigError(ValueError):
    """A run configuration is malformed or violates an invariant."""


class DimensionError(ValueError):
    """Matrix or vector dimensions are inconsistent."""


class UnstableClosedLoopError(RuntimeError):
    """A discrete Lyapunov equation was requested for a non-Schur loop."""


class DareDivergenceError(RuntimeError):
    """The Riccati fixed-point iteration did not converge within its cap."""


class NoStableSeedError(RuntimeError):
    """Every sampled initial swarm was unstable, repeatedly."""


class NumericError(RuntimeError):
    """An internal numeric computation failed (eigensolve, residual check)."""
