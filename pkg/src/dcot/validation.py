"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidProbability

SURVIVAL_MESSAGE = "corruption survival probability must be in (0,1]"


def check_probability(p: float) -> float:
    """Validate a survival probability, returning it as a float."""
    p = float(p)
    if math.isnan(p) or not 0.0 < p <= 1.0:
        raise InvalidProbability(SURVIVAL_MESSAGE)
    return p


def check_ridge(ridge: float | None) -> float | None:
    """Validate a ridge coefficient; None means the scaled default."""
    if ridge is None:
        return None
    ridge = float(ridge)
    if math.isnan(ridge) or ridge < 0.0:
        raise ValueError("ridge must be a non-negative real number")
    return ridge


def check_positive_int(name: str, value: int, minimum: int = 1) -> int:
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def as_float_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D float64 vector."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def as_float_matrix(x, name: str = "x") -> np.ndarray:
    """Coerce to a 2-D float64 matrix."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    return arr
