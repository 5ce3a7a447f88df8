"""Estimation and p-values for knockoff-augmented regression.

The knockoff copy turns one regression into two independent estimators of
the same coefficient vector:

    beta1 = (2*Sigma - D)^{-1} (X + Xt)' Y   ~  N(beta, 2 tau^2 (2*Sigma - D)^{-1})
    beta2 = D^{-1} (X - Xt)' Y               ~  N(beta, 2 tau^2 D^{-1})

Independence follows from (X + Xt)'(X - Xt) = 0.  Component-wise
standardization gives two t statistics per variable and hence a screening
p-value (from beta1) and a testing p-value (from beta2), both two-sided
against the t distribution with n - 2d degrees of freedom, or against the
normal when the noise variance is supplied.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    DimensionError,
    NotPositiveDefiniteError,
    ParameterError,
)
from .validation import as_vector, check_full_rank, check_positive

# p-values are clamped away from exact zero so downstream logs stay finite.
_P_FLOOR = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class EstimateSet:
    """Coefficient estimates from one knockoff-augmented fit.

    ``tau2_hat`` is the residual variance of the regression of y on the
    augmented matrix (X, Xt); ``dof`` is its n - 2d degrees of freedom.
    When ``tau2_known`` is set, downstream p-values use normal tails with
    that variance instead of ``tau2_hat``.
    """

    beta_ols: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    tau2_hat: float
    dof: int
    tau2_known: float | None = None


@dataclass(frozen=True)
class PValuePair:
    """Screening and testing statistics with their two-sided p-values.

    ``dof`` is the degrees of freedom the tails were computed with
    (math.inf in known-variance mode).
    """

    t1: np.ndarray
    t2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    dof: float


def ols_fit(problem, variance=True):
    """Ordinary least squares fit of a DesignProblem.

    Returns (beta_ols, tau2_ols) where tau2_ols = RSS / (n - d), or
    (beta_ols, None) when ``variance`` is False.  Requires n > d for the
    variance estimate.
    """
    x, y = problem.x, problem.y
    n, d = x.shape
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    if not variance:
        return beta, None
    if n == d:
        raise ParameterError(
            "residual variance is undefined at n == d; "
            "call with variance=False or add observations"
        )
    resid = y - x @ beta
    tau2 = float(resid @ resid) / (n - d)
    return beta, tau2


def knockoff_estimates(bundle, y, tau2_known=None):
    """Paired estimators and residual variance from a knockoff bundle.

    Parameters
    ----------
    bundle : KnockoffBundle
    y : ndarray of shape (n,)
    tau2_known : float, optional
        Externally known noise variance; recorded for downstream use.

    Returns
    -------
    EstimateSet

    Notes
    -----
    ``tau2_hat`` comes from one QR factorization of the augmented matrix
    (X, Xt); at n == 2d the augmented fit is exact, ``tau2_hat`` is set to
    0 and p-value computation will refuse to run without ``tau2_known``.
    """
    x, x_tilde, s, sigma = bundle.x, bundle.x_tilde, bundle.s, bundle.sigma
    n, d = x.shape
    y = as_vector(y, length=n)
    if tau2_known is not None:
        tau2_known = check_positive(tau2_known, "tau2_known")
    if np.any(s <= 0.0):
        raise NotPositiveDefiniteError("D is singular: nonpositive s entry")

    two_sigma_minus_d = 2.0 * sigma - np.diag(s)
    lam_min = float(np.linalg.eigvalsh(two_sigma_minus_d)[0])
    if lam_min <= 0.0:
        raise NotPositiveDefiniteError(
            f"2*Sigma - D is singular (eigenvalue {lam_min:.3e})"
        )
    beta1 = np.linalg.solve(two_sigma_minus_d, (x + x_tilde).T @ y)
    beta2 = ((x - x_tilde).T @ y) / s
    beta_ols = np.linalg.solve(sigma, x.T @ y)

    dof = n - 2 * d
    if dof > 0:
        q, _ = np.linalg.qr(np.hstack([x, x_tilde]))
        resid = y - q @ (q.T @ y)
        tau2_hat = float(resid @ resid) / dof
    else:
        tau2_hat = 0.0
    return EstimateSet(
        beta_ols=beta_ols, beta1=beta1, beta2=beta2,
        tau2_hat=tau2_hat, dof=dof, tau2_known=tau2_known,
    )


def t_statistics(est, bundle):
    """Standardized screening and testing statistics.

    T1 scales beta1 by the square roots of diag((2*Sigma - D)^{-1}) and by
    tau*sqrt(2); T2 scales beta2 by sqrt(s) / (tau*sqrt(2)).  Uses the
    known noise standard deviation when ``est.tau2_known`` is set, else the
    augmented-fit estimate.

    Returns
    -------
    (t1, t2) : pair of ndarrays of shape (d,)
    """
    if est.tau2_known is not None:
        tau = math.sqrt(est.tau2_known)
    elif est.tau2_hat > 0.0:
        tau = math.sqrt(est.tau2_hat)
    else:
        raise ParameterError(
            "residual variance is zero (n == 2d leaves no degrees of "
            "freedom); supply tau2_known or use the augmentation path"
        )
    two_sigma_minus_d = 2.0 * bundle.sigma - np.diag(bundle.s)
    inv_diag = np.diag(np.linalg.inv(two_sigma_minus_d))
    t1 = est.beta1 / (tau * math.sqrt(2.0) * np.sqrt(inv_diag))
    t2 = np.sqrt(bundle.s) * est.beta2 / (tau * math.sqrt(2.0))
    return t1, t2


def two_sided_p(t, dof):
    """Two-sided tail probability P(t_dof^2 > t^2).

    ``dof`` is a number of degrees of freedom >= 1, or math.inf for
    standard-normal tails.  Accepts scalars or arrays; results are clamped
    into (0, 1].
    """
    if dof is None:
        raise ParameterError("dof must be a number or math.inf")
    if not math.isinf(dof):
        if dof < 1:
            raise ParameterError(f"dof must be >= 1 or infinite, got {dof}")
        p = 2.0 * stats.t.sf(np.abs(t), df=dof)
    else:
        p = 2.0 * stats.norm.sf(np.abs(t))
    p = np.minimum(p, 1.0)
    p = np.maximum(p, _P_FLOOR)
    if np.ndim(t) == 0:
        return float(p)
    return p


def pvalue_pair(est, bundle):
    """Screening/testing p-value pair for every variable.

    Composes t_statistics and two_sided_p; normal tails are used when the
    noise variance is known, t tails with n - 2d degrees of freedom
    otherwise.
    """
    t1, t2 = t_statistics(est, bundle)
    dof = math.inf if est.tau2_known is not None else float(est.dof)
    p1 = two_sided_p(t1, dof)
    p2 = two_sided_p(t2, dof)
    return PValuePair(t1=t1, t2=t2, p1=p1, p2=p2, dof=dof)
