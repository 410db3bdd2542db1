"""Input validation helpers used across the package and its estimators."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError

SYMMETRY_TOL = 1e-12


def as_float_array(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def check_vector(v, n: int, name: str) -> np.ndarray:
    arr = as_float_array(v, name).reshape(-1)
    if arr.shape != (n,):
        raise DimensionError(f"{name} must be a vector of length {n}, got shape {np.shape(v)}")
    return arr


def check_matrix(a, shape: tuple[int, int], name: str) -> np.ndarray:
    arr = as_float_array(a, name)
    if arr.ndim != 2 or arr.shape != shape:
        raise DimensionError(f"{name} must have shape {shape}, got {np.shape(a)}")
    return arr


def check_square(a, name: str) -> np.ndarray:
    arr = as_float_array(a, name)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {np.shape(a)}")
    return arr


def check_symmetric(a, name: str, tol: float = SYMMETRY_TOL) -> np.ndarray:
    arr = check_square(a, name)
    scale = max(1.0, float(np.abs(arr).max(initial=0.0)))
    if np.abs(arr - arr.T).max(initial=0.0) > tol * scale:
        raise ValueError(f"{name} must be symmetric to {tol}")
    return arr


def check_spd(a, name: str, tol: float = SYMMETRY_TOL) -> np.ndarray:
    arr = check_symmetric(a, name, tol)
    if np.linalg.eigvalsh(arr).min() <= 0.0:
        raise ValueError(f"{name} must be positive definite")
    return arr


def check_state_batch(x, n: int, name: str = "X") -> np.ndarray:
    """Coerce a single state or a batch of states to shape (N, n)."""
    arr = as_float_array(x, name)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise DimensionError(f"{name} must have shape (N, {n}), got {np.shape(x)}")
    return arr
