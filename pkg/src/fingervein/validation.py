"""Input validation helpers shared across the package."""

import numpy as np


class NumericError(ArithmeticError):
    """A computation received or produced non-finite values."""


def check_image(image, name="image"):
    """Coerce to a float64 2-D array and reject empty or non-2-D input."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(
            f"{name} must be a non-empty 2-D array, got shape {arr.shape}"
        )
    return arr


def check_unit_image(image, name="image"):
    """Like :func:`check_image`, additionally requiring pixels in [0, 1]."""
    arr = check_image(image, name)
    lo, hi = arr.min(), arr.max()
    if lo < 0.0 or hi > 1.0:
        raise ValueError(
            f"{name} pixels must lie in [0, 1], found range [{lo}, {hi}]"
        )
    return arr


def check_matrix(X, n_features=None, name="X"):
    """Coerce to a float64 2-D sample matrix (rows are samples)."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(
            f"{name} must be a non-empty 2-D array of samples, got shape {arr.shape}"
        )
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(
            f"{name} has {arr.shape[1]} features, expected {n_features}"
        )
    return arr


def check_finite(arr, name="array"):
    """Raise :class:`NumericError` if any entry is NaN or infinite."""
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr
