"""Input validation helpers."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DataError, DomainError


def check_event_times(X, *, name="event times"):
    """Return a sorted float copy of ``X`` as a 1-D array.

    ``X`` may be a sequence, a 1-D array or a single-column 2-D array (the
    scikit-learn ``(n_samples, 1)`` layout).  Times must be finite and
    strictly positive.
    """
    try:
        arr = check_array(X, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    except ValueError as exc:
        raise DataError(f"invalid {name}: {exc}") from exc
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DataError(f"{name} must have a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.ndim != 1 or arr.size == 0:
        raise DataError(f"{name} must be a non-empty 1-D array")
    if np.any(arr <= 0):
        raise DataError(f"{name} must be strictly positive")
    return np.sort(arr, kind="stable")


def check_points(t, *, name="t"):
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim > 1:
        raise DomainError(f"{name} must be a scalar or 1-D array")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def check_positive(value, name, *, allow_inf=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise DomainError(f"{name} must be a real number, got {value!r}")
    if not value > 0 or (not allow_inf and not np.isfinite(value)):
        raise DomainError(f"{name} must be positive, got {value!r}")
    return float(value)


def check_count(value, name, *, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
