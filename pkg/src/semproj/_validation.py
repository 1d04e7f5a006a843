"""Small input checks shared by the numeric modules."""

import numpy as np

from .exceptions import InsufficientDataError, ZeroVarianceError


def as_1d_float(values, name="values", min_len=1):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < min_len:
        raise InsufficientDataError(f"{name} needs at least {min_len} values, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_paired(x, y, min_len=2):
    x = as_1d_float(x, "x")
    y = as_1d_float(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} != {y.shape[0]}")
    if x.shape[0] < min_len:
        raise InsufficientDataError(f"need at least {min_len} paired values, got {x.shape[0]}")
    return x, y


def is_constant(arr):
    """True when ``arr`` has no spread beyond rounding noise."""
    arr = np.asarray(arr, dtype=np.float64)
    spread = float(np.max(arr) - np.min(arr))
    scale = float(np.max(np.abs(arr))) if arr.size else 0.0
    return spread <= 1e-12 * max(scale, 1e-300)


def check_not_constant(arr, name="values"):
    if is_constant(arr):
        raise ZeroVarianceError(f"{name} has zero variance")
