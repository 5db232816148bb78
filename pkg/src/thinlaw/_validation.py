"""Input checks in the spirit of ``sklearn.utils.validation``."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import InvalidParams

NORM_TOL = 1e-12
RENORM_TOL = 1e-9
CONDITIONING_FLOOR = 1e-300


def check_probability(p, name="p", *, open_interval=True):
    """Return ``p`` as a float, raising :class:`InvalidParams` outside (0, 1)."""
    if isinstance(p, bool) or not isinstance(p, numbers.Real):
        raise InvalidParams(f"{name} must be a real number, got {p!r}")
    p = float(p)
    if not np.isfinite(p):
        raise InvalidParams(f"{name} must be finite, got {p}")
    if open_interval and not 0.0 < p < 1.0:
        raise InvalidParams(f"{name} must lie in (0, 1), got {p}")
    if not open_interval and not 0.0 <= p <= 1.0:
        raise InvalidParams(f"{name} must lie in [0, 1], got {p}")
    return p


def check_int(value, name, *, min_value=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        if isinstance(value, numbers.Real) and float(value).is_integer():
            value = int(value)
        else:
            raise InvalidParams(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if min_value is not None and value < min_value:
        raise InvalidParams(f"{name} must be >= {min_value}, got {value}")
    return value


def check_real(value, name, *, gt=None, ge=None, le=None, lt=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InvalidParams(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise InvalidParams(f"{name} must be finite, got {value}")
    if gt is not None and not value > gt:
        raise InvalidParams(f"{name} must be > {gt}, got {value}")
    if ge is not None and not value >= ge:
        raise InvalidParams(f"{name} must be >= {ge}, got {value}")
    if lt is not None and not value < lt:
        raise InvalidParams(f"{name} must be < {lt}, got {value}")
    if le is not None and not value <= le:
        raise InvalidParams(f"{name} must be <= {le}, got {value}")
    return value


def check_pmf_array(X, *, ensure_2d=True):
    """Validate a matrix whose rows are sub-probability vectors on {0, 1, ...}.

    Each row may sum to less than one; the deficit is read as mass beyond the
    last column. Returns a float64 copy.
    """
    X = np.array(X, dtype=np.float64, copy=True)
    if X.ndim == 1 and ensure_2d:
        raise InvalidParams(
            "Expected a 2D array of row pmfs, got a 1D array; reshape with "
            "X.reshape(1, -1) for a single distribution"
        )
    if X.ndim != 2:
        raise InvalidParams(f"Expected a 2D array, got {X.ndim} dimensions")
    if X.shape[1] == 0:
        raise InvalidParams("pmf rows must have at least one column")
    if not np.all(np.isfinite(X)):
        raise InvalidParams("pmf array contains NaN or infinity")
    if np.any(X < 0):
        raise InvalidParams("pmf entries must be nonnegative")
    if np.any(X.sum(axis=1) > 1 + RENORM_TOL):
        raise InvalidParams("row sums must not exceed 1")
    return X
