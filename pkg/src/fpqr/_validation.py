"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidInputError


def check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0 or not np.isfinite(tau):
        raise InvalidInputError(f"quantile level must lie in (0, 1), got {tau}")
    return tau


def as_matrix(x, name: str, *, allow_1d: bool = False) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if allow_1d and arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return arr


def check_grid(grid, name: str = "grid") -> np.ndarray:
    g = as_vector(grid, name)
    if g.size < 2 or np.any(np.diff(g) <= 0.0):
        raise InvalidInputError(f"{name} must be strictly increasing with at least 2 points")
    return g
