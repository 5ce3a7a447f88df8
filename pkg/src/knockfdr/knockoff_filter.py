"""Knockoff-filter baseline: lasso entry statistics and signed-max selection.

The filter fits the lasso path of y on the column-bound matrix (X, Xt)
over a descending log-spaced penalty grid, records for each column the
largest penalty at which its coefficient is nonzero, and contrasts each
variable with its knockoff through

    W_j = max(Z_j, Zt_j) * (+1 if Z_j > Zt_j else -1).

Selection thresholds the W values by a data-dependent cutoff whose
numerator optionally carries a +1 offset (the more conservative variant).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, ParameterError
from .procedures import SelectionResult
from .validation import as_matrix, as_vector, check_unit_interval

# Lasso path defaults: objective (1/2n)||y - Xb||^2 + lam*||b||_1 on a
# log-spaced grid from lam_max down to grid_ratio*lam_max.
DEFAULT_GRID_SIZE = 100
DEFAULT_GRID_RATIO = 0.01
# A coefficient counts as nonzero above this magnitude.
NONZERO_TOL = 1e-12
# Coordinate descent stops when the largest coordinate update in a sweep
# falls below this; the KKT residual is checked at every grid point.
SWEEP_TOL = 1e-9
MAX_SWEEPS = 100_000
KKT_TOL = 1e-6


@dataclass(frozen=True)
class WStatistics:
    """Entry penalties of the original and knockoff columns and their
    signed-max contrasts."""

    z: np.ndarray
    z_tilde: np.ndarray
    w: np.ndarray


def _soft_threshold(value, threshold):
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def _kkt_violation(gradient, b, lam):
    """Max violation of stationarity given the gradient x'(y - Xb)/n."""
    active = np.abs(b) > NONZERO_TOL
    res = 0.0
    if np.any(active):
        res = float(
            np.max(np.abs(gradient[active] - lam * np.sign(b[active])))
        )
    if np.any(~active):
        res = max(res, float(np.max(np.abs(gradient[~active])) - lam), 0.0)
    return res


def lasso_kkt_residual(x, y, b, lam):
    """KKT residual of a candidate lasso solution, computed from scratch.

    Nonzero coordinates must satisfy x_j'(y - Xb)/n = lam * sign(b_j);
    zero coordinates need |x_j'(y - Xb)/n| <= lam.  Returns the largest
    violation across coordinates.
    """
    x = as_matrix(x)
    y = as_vector(y, length=x.shape[0])
    b = as_vector(b, length=x.shape[1], name="b")
    gradient = x.T @ (y - x @ b) / x.shape[0]
    return _kkt_violation(gradient, b, lam)


def _lasso_path_entries(x, y, grid_size, grid_ratio, return_path=False):
    """Entry penalty per column of ``x`` along a descending lasso grid.

    Coordinate descent on the Gram formulation with warm starts; the
    active set is polished between full sweeps.  Raises ConvergenceError
    when a grid point exhausts MAX_SWEEPS or fails the KKT check.
    """
    n, p = x.shape
    c = x.T @ y / n
    lam_max = float(np.max(np.abs(c)))
    if lam_max <= 0.0:
        entries = np.zeros(p)
        if return_path:
            return entries, np.zeros(0), np.zeros((0, p))
        return entries

    grid = np.geomspace(lam_max, grid_ratio * lam_max, grid_size)
    gram = x.T @ x / n
    gdiag = np.diag(gram).copy()
    if np.any(gdiag <= 0.0):
        raise ParameterError("x_aug has a zero column")

    b = np.zeros(p)
    resid_corr = c.copy()  # c - gram @ b, maintained incrementally
    entries = np.zeros(p)
    path = np.zeros((grid_size, p)) if return_path else None
    all_idx = range(p)

    for gi, lam in enumerate(grid):
        sweeps = 0
        while True:
            sweeps += 1
            if sweeps > MAX_SWEEPS:
                raise ConvergenceError(
                    f"lasso did not converge at grid point {gi} "
                    f"(penalty {lam:.3e}) within {MAX_SWEEPS} sweeps"
                )
            max_delta = 0.0
            for j in all_idx:
                rho = resid_corr[j] + gdiag[j] * b[j]
                bj = _soft_threshold(rho, lam) / gdiag[j]
                delta = bj - b[j]
                if delta != 0.0:
                    b[j] = bj
                    resid_corr -= gram[:, j] * delta
                    max_delta = max(max_delta, abs(delta))
            if max_delta < SWEEP_TOL:
                break
            # Polish the current active set before the next full pass.
            while True:
                sweeps += 1
                if sweeps > MAX_SWEEPS:
                    raise ConvergenceError(
                        f"lasso did not converge at grid point {gi} "
                        f"(penalty {lam:.3e}) within {MAX_SWEEPS} sweeps"
                    )
                active = np.nonzero(b)[0]
                max_delta = 0.0
                for j in active:
                    rho = resid_corr[j] + gdiag[j] * b[j]
                    bj = _soft_threshold(rho, lam) / gdiag[j]
                    delta = bj - b[j]
                    if delta != 0.0:
                        b[j] = bj
                        resid_corr -= gram[:, j] * delta
                        max_delta = max(max_delta, abs(delta))
                if max_delta < SWEEP_TOL:
                    break
        # Fresh gradient for the optimality check; the incremental one can
        # drift over long paths.
        gradient = c - gram @ b
        resid_corr = gradient
        kkt = _kkt_violation(gradient, b, lam)
        if kkt > KKT_TOL:
            raise ConvergenceError(
                f"KKT residual {kkt:.3e} exceeds {KKT_TOL} at grid point "
                f"{gi} (penalty {lam:.3e})"
            )
        newly_active = (entries == 0.0) & (np.abs(b) > NONZERO_TOL)
        entries[newly_active] = lam
        if return_path:
            path[gi] = b
    if return_path:
        return entries, grid, path
    return entries


def lasso_entry_stats(
    x_aug,
    y,
    grid_size=DEFAULT_GRID_SIZE,
    grid_ratio=DEFAULT_GRID_RATIO,
):
    """Entry penalties (z, z_tilde) for an augmented design (X, Xt).

    Parameters
    ----------
    x_aug : ndarray of shape (n, 2d)
        Original design column-bound with its knockoff copy.
    y : ndarray of shape (n,)
    grid_size : int
        Number of penalty grid points, >= 2.
    grid_ratio : float
        Ratio of the smallest to the largest grid penalty, in (0, 1).

    Returns
    -------
    (z, z_tilde) : pair of ndarrays of shape (d,)
        Largest grid penalty at which each column's coefficient is nonzero,
        0 for columns that never enter.
    """
    x_aug = as_matrix(x_aug, name="x_aug")
    if x_aug.shape[1] % 2 != 0:
        raise DimensionError(
            f"x_aug must have an even number of columns, got {x_aug.shape[1]}"
        )
    y = as_vector(y, length=x_aug.shape[0])
    if grid_size < 2:
        raise ParameterError(f"grid_size must be >= 2, got {grid_size}")
    grid_ratio = check_unit_interval(grid_ratio, "grid_ratio")
    entries = _lasso_path_entries(x_aug, y, int(grid_size), grid_ratio)
    d = x_aug.shape[1] // 2
    return entries[:d], entries[d:]


def w_from_z(z, z_tilde):
    """Signed-max contrast of entry penalties.

    W_j carries the common magnitude max(z_j, zt_j) with positive sign only
    when the original strictly beats its knockoff; ties go negative.
    """
    z = as_vector(z, name="z")
    z_tilde = as_vector(z_tilde, length=z.shape[0], name="z_tilde")
    if np.any(z < 0.0) or np.any(z_tilde < 0.0):
        raise ParameterError("entry penalties must be nonnegative")
    magnitude = np.maximum(z, z_tilde)
    return np.where(z > z_tilde, magnitude, -magnitude) + 0.0


def knockoff_select(w, alpha, plus=True):
    """Select variables whose W statistic clears the data-driven cutoff.

    Scans the candidate set {|W_j|} \\ {0} in increasing order for the
    smallest t with (plus + #{W_j <= -t}) / max(#{W_j >= t}, 1) <= alpha;
    the cutoff is +inf (no selection) when no candidate qualifies.
    """
    w = as_vector(w, name="w")
    alpha = check_unit_interval(alpha, "alpha")
    candidates = np.unique(np.abs(w))
    candidates = candidates[candidates > 0.0]
    offset = 1.0 if plus else 0.0
    threshold = np.inf
    for t in candidates:
        negatives = int(np.count_nonzero(w <= -t))
        positives = int(np.count_nonzero(w >= t))
        if (offset + negatives) / max(positives, 1) <= alpha:
            threshold = float(t)
            break
    mask = w >= threshold
    return SelectionResult(
        procedure="KnockoffFilterPlus" if plus else "KnockoffFilter",
        rejected=np.nonzero(mask)[0],
        r_count=int(mask.sum()),
        values=w.copy(),
        threshold=threshold,
        level=alpha,
    )
