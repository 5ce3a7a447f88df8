"""Input validation helpers shared by the core routines, estimators and CLI."""

import numpy as np

from .errors import DimensionError, ParameterError, RankDeficiencyError

# Relative singular-value cutoff below which a design counts as rank deficient.
RANK_RTOL = 1e-10


def as_matrix(x, name="x"):
    """Coerce ``x`` to a float64 2-D array, rejecting anything else."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D array, got ndim={x.ndim}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise DimensionError(f"{name} must have positive shape, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"{name} contains non-finite entries")
    return x


def as_vector(v, length=None, name="y"):
    """Coerce ``v`` to a float64 1-D array, optionally checking its length."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1:
        raise DimensionError(f"{name} must be a 1-D array, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise DimensionError(
            f"{name} has length {v.shape[0]}, expected {length}"
        )
    if not np.all(np.isfinite(v)):
        raise ParameterError(f"{name} contains non-finite entries")
    return v


def check_unit_interval(value, name):
    """Validate a scalar parameter in the open interval (0, 1)."""
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_positive(value, name):
    value = float(value)
    if not value > 0.0:
        raise ParameterError(f"{name} must be positive, got {value!r}")
    return value


def check_full_rank(x, name="x"):
    """Raise RankDeficiencyError unless the smallest singular value of ``x``
    exceeds RANK_RTOL times the largest.  Returns the singular values."""
    sv = np.linalg.svd(x, compute_uv=False)
    if sv[0] <= 0.0 or sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficiencyError(
            f"{name} is rank deficient: smallest singular value "
            f"{sv[-1]:.3e} vs largest {sv[0]:.3e}"
        )
    return sv


def column_norms(x):
    return np.linalg.norm(x, axis=0)


def normalize_columns(x, name="x"):
    """Scale columns of ``x`` to unit Euclidean norm.

    Returns the scaled matrix and the original norms (needed to map
    coefficient estimates back to the input scale).
    """
    norms = column_norms(x)
    if np.any(norms <= 0.0):
        bad = int(np.nonzero(norms <= 0.0)[0][0])
        raise RankDeficiencyError(f"{name} column {bad} has zero norm")
    return x / norms, norms
