"""Step-up selection procedures on paired p-values.

Implements the classical Benjamini-Hochberg step-up rule, the Storey-type
null-proportion estimate, and the two screened procedures that combine a
Bonferroni-style cut on the screening p-values with a step-up pass over
the testing p-values.  With screening threshold lam (default sqrt(alpha))
the step-up runs at level alpha/lam, so the screening x testing product is
always alpha.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .validation import as_vector, check_unit_interval


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one selection procedure.

    ``values`` holds the per-index deciding statistic (a p-value, a screened
    p-value, or a signed W statistic) and ``threshold`` the cutoff it was
    compared against, so every rejection can be re-derived from the record.
    Indices are 0-based.
    """

    procedure: str
    rejected: np.ndarray
    r_count: int
    values: np.ndarray
    threshold: float
    level: float
    lam: float | None = None
    pi0_hat: float | None = None


@dataclass(frozen=True)
class ScreenedPValues:
    """Testing p-values after the screening cut.

    ``p_tilde[j]`` equals ``pi0 * p2[j]`` when ``p1[j] <= lam`` and exactly
    1 otherwise; values above 1 are kept as-is.
    """

    p_tilde: np.ndarray
    screened_in: np.ndarray
    lam: float


def _check_pvalues(p, name):
    p = as_vector(p, name=name)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ParameterError(f"{name} entries must lie in [0, 1]")
    return p


def _step_up(values, level):
    """Largest r with r-th smallest value <= r*level/d, plus rejection mask.

    Ties at the deciding order statistic are rejected together; because the
    thresholds increase with rank this never changes r.
    """
    d = values.shape[0]
    ordered = np.sort(values)
    thresholds = level * np.arange(1, d + 1) / d
    qualifying = np.nonzero(ordered <= thresholds)[0]
    if qualifying.size == 0:
        return 0, np.zeros(d, dtype=bool)
    r = int(qualifying[-1]) + 1
    return r, values <= ordered[r - 1]


def bh(p, level):
    """Benjamini-Hochberg step-up selection at the given level.

    Rejects the hypotheses with the r smallest p-values, where r is the
    largest rank whose order statistic sits below rank*level/d.
    """
    p = _check_pvalues(p, "p")
    level = check_unit_interval(level, "level")
    r, mask = _step_up(p, level)
    d = p.shape[0]
    threshold = level * r / d if r > 0 else 0.0
    return SelectionResult(
        procedure="BH",
        rejected=np.nonzero(mask)[0],
        r_count=int(mask.sum()),
        values=p.copy(),
        threshold=threshold,
        level=level,
    )


def storey_pi0(p, eta):
    """Count-based estimate of the proportion of true nulls.

    pi0_hat = (d - #{p_j <= eta} + 1) / (d * (1 - eta)).  The estimate can
    exceed 1 and is deliberately not capped; procedures record it so the
    inflation is visible in the audit trail.
    """
    p = _check_pvalues(p, "p")
    eta = check_unit_interval(eta, "eta")
    d = p.shape[0]
    return (d - int(np.count_nonzero(p <= eta)) + 1) / (d * (1.0 - eta))


def screen_pvalues(p1, p2, lam, pi0=1.0):
    """Apply the screening cut: keep pi0*p2 where p1 <= lam, else 1."""
    p1 = _check_pvalues(p1, "p1")
    p2 = _check_pvalues(p2, "p2")
    if p1.shape != p2.shape:
        raise ParameterError("p1 and p2 must have the same length")
    lam = check_unit_interval(lam, "lam")
    screened = p1 <= lam
    p_tilde = np.where(screened, pi0 * p2, 1.0)
    return ScreenedPValues(p_tilde=p_tilde, screened_in=screened, lam=lam)


def bonferroni_bh(p1, p2, alpha, lam=None):
    """Screen on p1, then step-up on the surviving p2 values.

    Step 1 sets ptilde_j = p2_j when p1_j <= lam (default sqrt(alpha)) and
    1 otherwise; step 2 runs the step-up rule at level alpha/lam (which is
    sqrt(alpha) at the default).  Choosing lam < alpha pushes the step-up
    level above 1 and is allowed but degenerate.
    """
    alpha = check_unit_interval(alpha, "alpha")
    lam = math.sqrt(alpha) if lam is None else check_unit_interval(lam, "lam")
    level = alpha / lam
    scr = screen_pvalues(p1, p2, lam)
    r, mask = _step_up(scr.p_tilde, level)
    d = scr.p_tilde.shape[0]
    return SelectionResult(
        procedure="BonferroniBH",
        rejected=np.nonzero(mask)[0],
        r_count=int(mask.sum()),
        values=scr.p_tilde.copy(),
        threshold=level * r / d if r > 0 else 0.0,
        level=level,
        lam=lam,
    )


def adaptive_bonferroni_bh(p1, p2, alpha, eta=0.5, lam=None, pi0=None):
    """Screened step-up with testing p-values rescaled by the null estimate.

    The null proportion is estimated from the full p2 vector, every
    screened p2 is multiplied by it (no capping at 1), and the same
    step-up as bonferroni_bh runs on the rescaled values.  ``pi0``
    overrides the estimate; with pi0=1 the procedure coincides with
    bonferroni_bh on every input.
    """
    alpha = check_unit_interval(alpha, "alpha")
    lam = math.sqrt(alpha) if lam is None else check_unit_interval(lam, "lam")
    level = alpha / lam
    pi0_hat = storey_pi0(p2, eta) if pi0 is None else float(pi0)
    if pi0_hat <= 0.0:
        raise ParameterError(f"pi0 must be positive, got {pi0_hat!r}")
    scr = screen_pvalues(p1, p2, lam, pi0=pi0_hat)
    r, mask = _step_up(scr.p_tilde, level)
    d = scr.p_tilde.shape[0]
    return SelectionResult(
        procedure="AdaptiveBonferroniBH",
        rejected=np.nonzero(mask)[0],
        r_count=int(mask.sum()),
        values=scr.p_tilde.copy(),
        threshold=level * r / d if r > 0 else 0.0,
        level=level,
        lam=lam,
        pi0_hat=pi0_hat,
    )
