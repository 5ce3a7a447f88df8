"""Fixed-design knockoff construction.

Given a design matrix X with Gram matrix Sigma = X'X, a knockoff copy is a
matrix Xt of the same shape satisfying

    Xt'Xt = Sigma        and        Xt'X = Sigma - D,

where D = diag(s) and s > 0 is chosen so that 2*Sigma - D stays positive
definite.  This module builds such copies explicitly,

    Xt = X Sigma^{-1} (Sigma - D) + Ut (2D - D Sigma^{-1} D)^{1/2},

with Ut an orthonormal basis orthogonal to the column space of X, and
provides the equi-correlated choice of s for column-normalized designs.
Requires n >= 2d observations.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionError,
    NotPositiveDefiniteError,
    ParameterError,
)
from .validation import as_matrix, as_vector, check_full_rank

# Pass/fail level for the construction identities.
IDENTITY_TOL = 1e-8
# Basis orthogonality requirement.
ORTHO_TOL = 1e-10
# Smallest admissible eigenvalue of 2*Sigma - D at construction time.
PD_EIGEN_FLOOR = 1e-10
# Floor applied to the equi-correlated s so D stays invertible.
S_FLOOR = 1e-10
# Relative positive-definiteness margin the pipeline passes to
# equicorrelated_s: s is capped at 2*lambda_min/(1 + margin) so that the
# paired-estimator inverse of 2*Sigma - D stays well conditioned.
DEFAULT_PD_MARGIN = 0.01


@dataclass(frozen=True)
class DesignProblem:
    """A regression instance: response vector, design matrix, scaling flag.

    Parameters
    ----------
    y : ndarray of shape (n,)
        Response vector.
    x : ndarray of shape (n, d)
        Design matrix with full column rank and n >= d.
    normalized : bool
        True when the columns of ``x`` have unit Euclidean norm.
    """

    y: np.ndarray
    x: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        x = as_matrix(self.x)
        y = as_vector(self.y, length=x.shape[0])
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        n, d = x.shape
        if n < d:
            raise DimensionError(f"need n >= d, got n={n}, d={d}")
        check_full_rank(x)
        if self.normalized:
            norms = np.linalg.norm(x, axis=0)
            if np.max(np.abs(norms - 1.0)) > 1e-10:
                raise ParameterError(
                    "normalized=True but columns are not unit-norm "
                    f"(max deviation {np.max(np.abs(norms - 1.0)):.3e})"
                )

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class KnockoffBundle:
    """A constructed knockoff copy together with the pieces that define it.

    Attributes
    ----------
    x : ndarray of shape (n, d)
        The design the knockoff was built from.
    sigma : ndarray of shape (d, d)
        Gram matrix X'X.
    s : ndarray of shape (d,)
        Diagonal of D.
    x_tilde : ndarray of shape (n, d)
        The knockoff copy.
    u_tilde : ndarray of shape (n, d)
        Orthonormal basis orthogonal to the column space of ``x``.
    seed : int
        Seed used to draw ``u_tilde``; kept for reproducibility.
    """

    x: np.ndarray
    sigma: np.ndarray
    s: np.ndarray
    x_tilde: np.ndarray
    u_tilde: np.ndarray
    seed: int

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class KnockoffDiagnostics:
    """Max-norm residuals of the three knockoff identities.

    ``gram_residual`` checks Xt'Xt = Sigma, ``cross_residual`` checks
    Xt'X = Sigma - D, and ``antisym_residual`` checks (X+Xt)'(X-Xt) = 0,
    the identity behind the independence of the two paired estimators.
    """

    gram_residual: float
    cross_residual: float
    antisym_residual: float
    passed: bool
    tol: float = IDENTITY_TOL


def gram_matrix(x):
    """Gram matrix Sigma = X'X of a full-column-rank design.

    Raises RankDeficiencyError when the smallest singular value of ``x``
    falls below 1e-10 times the largest.  The result is symmetrized to
    guard later eigendecompositions against rounding asymmetry.
    """
    x = as_matrix(x)
    check_full_rank(x)
    sigma = x.T @ x
    return 0.5 * (sigma + sigma.T)


def equicorrelated_s(sigma, pd_margin=0.0):
    """Equi-correlated knockoff diagonal for a unit-diagonal Gram matrix.

    Returns the constant vector s = min(2*lambda_min(Sigma), 1), floored at
    1e-10.  This is the largest constant choice keeping 2*Sigma - D positive
    semidefinite.  Whenever 2*lambda_min(Sigma) < 1 that choice makes
    2*Sigma - D exactly singular, which the explicit knockoff construction
    tolerates but the paired-estimator inverse does not; pass a small
    ``pd_margin`` (e.g. 0.01) to cap s at 2*lambda_min/(1 + pd_margin) so
    the smallest eigenvalue of 2*Sigma - D stays at least pd_margin * s.

    Parameters
    ----------
    sigma : ndarray of shape (d, d)
        Symmetric positive-definite Gram matrix with unit diagonal.
    pd_margin : float
        Relative positive-definiteness margin, >= 0.  Zero reproduces the
        textbook equi-correlated value.
    """
    sigma = as_matrix(sigma, name="sigma")
    d = sigma.shape[0]
    if sigma.shape[1] != d:
        raise DimensionError(f"sigma must be square, got {sigma.shape}")
    if pd_margin < 0.0:
        raise ParameterError(f"pd_margin must be >= 0, got {pd_margin!r}")
    diag_dev = np.max(np.abs(np.diag(sigma) - 1.0))
    if diag_dev > 1e-6:
        raise ParameterError(
            "equi-correlated knockoffs need a normalized design: "
            f"diag(sigma) deviates from 1 by {diag_dev:.3e}"
        )
    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    s = min(2.0 * lam_min, 1.0)
    if pd_margin > 0.0:
        s = min(s, 2.0 * lam_min / (1.0 + pd_margin))
    s = max(s, S_FLOOR)
    return np.full(d, s)


def psd_sqrt(m):
    """Symmetric positive-semidefinite square root via eigendecomposition.

    Eigenvalues in [-1e-8, 0) are treated as rounding noise and clamped to
    zero; anything below -1e-8 raises NotPositiveDefiniteError.
    """
    m = as_matrix(m, name="m")
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"m must be square, got {m.shape}")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    if w[0] < -1e-8:
        raise NotPositiveDefiniteError(
            f"matrix is not positive semidefinite: eigenvalue {w[0]:.3e}"
        )
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)) @ v.T
    return 0.5 * (root + root.T)


def complement_basis(x, seed):
    """Orthonormal basis of d directions orthogonal to the columns of ``x``.

    Draws d Gaussian vectors from a generator seeded with ``seed``, projects
    them onto the orthogonal complement of col(x), and orthonormalizes.  A
    second projection pass keeps both residuals near machine precision.
    Deterministic in (x, seed); requires n >= 2d.
    """
    x = as_matrix(x)
    n, d = x.shape
    if n < 2 * d:
        raise DimensionError(
            f"complement basis needs n >= 2d, got n={n}, d={d}"
        )
    check_full_rank(x)
    q, _ = np.linalg.qr(x)
    rng = np.random.default_rng(seed)
    for _ in range(4):
        g = rng.standard_normal((n, d))
        g -= q @ (q.T @ g)
        u, r = np.linalg.qr(g)
        # Degenerate draws (projected vectors nearly dependent) are retried
        # from the same stream, keeping the result a function of (x, seed).
        if np.min(np.abs(np.diag(r))) > 1e-8:
            break
    else:
        raise NotPositiveDefiniteError(
            "could not build a complement basis: projected draws degenerate"
        )
    u -= q @ (q.T @ u)
    u, _ = np.linalg.qr(u)
    return u


def construct_knockoff(x, s, seed):
    """Build the knockoff copy of ``x`` for diagonal D = diag(s).

    Parameters
    ----------
    x : ndarray of shape (n, d)
        Full-column-rank design with n >= 2d.
    s : float or ndarray of shape (d,)
        Positive diagonal of D; a scalar is broadcast.  2*Sigma - D must be
        positive definite (smallest eigenvalue above 1e-10).
    seed : int
        Seed for the complement-basis draw.

    Returns
    -------
    KnockoffBundle
    """
    x = as_matrix(x)
    n, d = x.shape
    if n < 2 * d:
        raise DimensionError(f"knockoffs need n >= 2d, got n={n}, d={d}")
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 0:
        s = np.full(d, float(s))
    s = as_vector(s, length=d, name="s")
    if np.any(s <= 0.0):
        raise ParameterError("all entries of s must be positive")

    sigma = gram_matrix(x)
    two_sigma_minus_d = 2.0 * sigma - np.diag(s)
    lam_min = float(np.linalg.eigvalsh(two_sigma_minus_d)[0])
    if lam_min <= PD_EIGEN_FLOOR:
        raise NotPositiveDefiniteError(
            "2*Sigma - D is numerically singular "
            f"(smallest eigenvalue {lam_min:.3e}); the design is too "
            "collinear for this s, reduce s or decorrelate the columns"
        )

    sigma_inv_d = np.linalg.solve(sigma, np.diag(s))
    c_squared = 2.0 * np.diag(s) - np.diag(s) @ sigma_inv_d
    c_root = psd_sqrt(c_squared)
    u_tilde = complement_basis(x, seed)
    x_tilde = x @ (np.eye(d) - sigma_inv_d) + u_tilde @ c_root
    return KnockoffBundle(
        x=x, sigma=sigma, s=s, x_tilde=x_tilde, u_tilde=u_tilde,
        seed=int(seed),
    )


def verify_knockoff(x, x_tilde, s):
    """Residuals of the defining knockoff identities; pure diagnostic.

    Returns a KnockoffDiagnostics with the max-abs residuals of
    Xt'Xt - Sigma, Xt'X - (Sigma - D) and (X+Xt)'(X-Xt), flagged pass/fail
    at 1e-8.
    """
    x = as_matrix(x)
    x_tilde = as_matrix(x_tilde, name="x_tilde")
    if x.shape != x_tilde.shape:
        raise DimensionError(
            f"shape mismatch: x is {x.shape}, x_tilde is {x_tilde.shape}"
        )
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 0:
        s = np.full(x.shape[1], float(s))
    s = as_vector(s, length=x.shape[1], name="s")

    sigma = x.T @ x
    gram_res = float(np.max(np.abs(x_tilde.T @ x_tilde - sigma)))
    cross_res = float(np.max(np.abs(x_tilde.T @ x - (sigma - np.diag(s)))))
    antisym_res = float(np.max(np.abs((x + x_tilde).T @ (x - x_tilde))))
    passed = max(gram_res, cross_res, antisym_res) <= IDENTITY_TOL
    return KnockoffDiagnostics(
        gram_residual=gram_res,
        cross_residual=cross_res,
        antisym_residual=antisym_res,
        passed=passed,
    )
