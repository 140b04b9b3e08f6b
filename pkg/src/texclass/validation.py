"""Input validation helpers used by the estimators and image operations."""
from __future__ import annotations

import numpy as np

from .errors import DataError


def as_intensity_grid(img, name: str = "img") -> np.ndarray:
    """Coerce to a 2-D float64 array of intensities in [0, 1].

    Raises ValueError on wrong rank and DataError on non-finite or
    out-of-range values.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D grid, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DataError(f"{name} has intensities outside [0, 1]")
    return arr


def as_feature_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 matrix, rejecting non-finite entries."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))
        r, c = bad[0]
        raise DataError(f"{name} has a non-finite value at row {r}, column {c}")
    return arr


def check_consistent_length(X: np.ndarray, y, x_name: str = "X", y_name: str = "y"):
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{y_name} must be 1-D, got shape {y.shape}")
    if len(y) != X.shape[0]:
        raise ValueError(
            f"{x_name} has {X.shape[0]} rows but {y_name} has {len(y)} entries"
        )
    return y
