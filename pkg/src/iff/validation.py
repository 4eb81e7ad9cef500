"""Input validation helpers.

Measurement matrices here are complex, which ``sklearn.utils.check_array``
rejects, so the estimators use these small checkers instead.
"""

import numbers

import numpy as np


def check_positive(value, name, strict=True, allow_inf=False):
    """Validate a positive (or non-negative) scalar and return it as float."""
    if not isinstance(value, numbers.Real) or np.isnan(value):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    if not allow_inf and not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return float(value)


def check_positive_int(value, name):
    """Validate a positive integer and return it as int."""
    if not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be >= 1, got {value}")
    return int(value)


def check_measurement_matrix(Y, name="Y"):
    """Validate a T x (2K+1) complex measurement matrix.

    Accepts real input (promoted to complex). Requires a 2-D array with an
    odd number of columns (symmetric frequency grid) and finite entries.
    """
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError(f"{name} must be 2-D (T, 2K+1), got shape {Y.shape}")
    t_count, width = Y.shape
    if t_count < 1:
        raise ValueError(f"{name} must contain at least one measurement row")
    if width < 3 or width % 2 == 0:
        raise ValueError(
            f"{name} must have an odd number of columns >= 3 "
            f"(samples on a symmetric grid), got {width}"
        )
    Y = Y.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(Y.real)) or not np.all(np.isfinite(Y.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return Y


def check_odd_row(row, name="row"):
    """Validate an odd-length 1-D complex vector of length >= 3."""
    row = np.asarray(row, dtype=np.complex128)
    if row.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {row.shape}")
    if row.size < 3 or row.size % 2 == 0:
        raise ValueError(f"{name} must have odd length >= 3, got {row.size}")
    return row


def check_window(window, name="window"):
    """Validate a (lo, hi) search interval with lo < hi."""
    try:
        lo, hi = (float(window[0]), float(window[1]))
    except (TypeError, IndexError) as exc:
        raise ValueError(f"{name} must be a (lo, hi) pair") from exc
    if not np.isfinite(lo) or not np.isfinite(hi) or lo >= hi:
        raise ValueError(f"{name} must satisfy lo < hi, got ({lo}, {hi})")
    return lo, hi
