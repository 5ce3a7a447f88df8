"""Monte Carlo harness: AR(1) designs, planted signals, replicated runs.

Each replication draws a design whose rows are independent stationary
AR(1) sequences across the d columns, plants a constant signal on k
coordinates, generates Gaussian noise, and runs every requested method on
the same dataset.  Replications derive their random streams from
(master seed, replication index), so results are independent of execution
order and worker count.
"""

import math
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import KnockfdrError, ParameterError
from .inference import knockoff_estimates, pvalue_pair
from .knockoff_filter import knockoff_select, lasso_entry_stats, w_from_z
from .knockoffs import construct_knockoff, equicorrelated_s, gram_matrix
from .procedures import adaptive_bonferroni_bh, bh, bonferroni_bh
from .validation import check_unit_interval, normalize_columns

# Method labels accepted throughout the package and the CLI.
METHOD_LABELS = ("bh", "bbh", "abbh", "knockoff", "knockoff-plus")
# Relative positive-definiteness margin applied to the equi-correlated s
# so the paired-estimator inverse stays well conditioned.
PD_MARGIN = 0.01

SimSeeds = namedtuple("SimSeeds", "design noise knockoff placement")

MethodCounts = namedtuple("MethodCounts", "v r true_discoveries")


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario.

    ``tau2_known`` switches inference to known-variance mode and is also
    used as the noise variance when generating data, so the declared value
    is truthful.  ``placement`` puts the k signals on the first k
    coordinates ("first", adjacent under the AR(1) correlation) or on a
    seeded random subset ("random").
    """

    n: int
    d: int
    k: int
    amplitude: float
    alpha: float = 0.1
    eta: float = 0.5
    rho: float = 0.5
    reps: int = 500
    seed: int = 0
    methods: tuple = ("bh", "bbh", "abbh", "knockoff-plus")
    tau2_known: float | None = None
    placement: str = "first"

    def __post_init__(self):
        if self.n < 2 * self.d:
            raise ParameterError(
                f"scenario needs n >= 2d, got n={self.n}, d={self.d}"
            )
        if not 0 <= self.k <= self.d:
            raise ParameterError(f"need 0 <= k <= d, got k={self.k}")
        if not -1.0 < self.rho < 1.0:
            raise ParameterError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.reps < 1:
            raise ParameterError(f"reps must be >= 1, got {self.reps}")
        if self.seed < 0:
            raise ParameterError(f"seed must be >= 0, got {self.seed}")
        check_unit_interval(self.alpha, "alpha")
        check_unit_interval(self.eta, "eta")
        if not self.methods:
            raise ParameterError("methods must be non-empty")
        for m in self.methods:
            if m not in METHOD_LABELS:
                raise ParameterError(
                    f"unknown method {m!r}; choose from {METHOD_LABELS}"
                )
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.placement not in ("first", "random"):
            raise ParameterError(
                f"placement must be 'first' or 'random', got {self.placement!r}"
            )
        if self.tau2_known is not None and self.tau2_known <= 0:
            raise ParameterError("tau2_known must be positive")


@dataclass(frozen=True)
class MethodSummary:
    method: str
    fdr_hat: float
    mc_stderr_fdr: float
    power_hat: float | None
    mean_rejections: float


@dataclass(frozen=True)
class ScenarioSummary:
    """Aggregated Monte Carlo results for one scenario."""

    config: ScenarioConfig
    pi0_true: float
    n_reps: int
    failed_reps: int
    per_method: dict = field(default_factory=dict)


def replication_seeds(master_seed, rep_index):
    """Named integer sub-seeds for one replication.

    Derived by hashing (master seed, replication index) through a seed
    sequence, so streams never depend on scheduling.
    """
    ss = np.random.SeedSequence([int(master_seed), int(rep_index)])
    state = ss.generate_state(4, np.uint64)
    return SimSeeds(*(int(v) for v in state))


def generate_design(n, d, rho, seed):
    """Design matrix whose rows are stationary AR(1) series across columns.

    Entry (i, t) = rho * entry (i, t-1) + sqrt(1 - rho^2) * innovation, with
    a standard-normal start, so every entry has unit marginal variance and
    columns l apart correlate like rho^l.  Deterministic per seed.
    """
    if not -1.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (-1, 1), got {rho}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, d))
    x = np.empty((n, d))
    x[:, 0] = z[:, 0]
    scale = math.sqrt(1.0 - rho * rho)
    for t in range(1, d):
        x[:, t] = rho * x[:, t - 1] + scale * z[:, t]
    return x


def plant_signal(d, k, amplitude):
    """Coefficient vector with the first k entries set to ``amplitude``."""
    if not 0 <= k <= d:
        raise ParameterError(f"need 0 <= k <= d, got k={k}, d={d}")
    beta = np.zeros(d)
    beta[:k] = amplitude
    return beta


def _signal_indices(config, seeds):
    if config.placement == "random" and config.k > 0:
        rng = np.random.default_rng(seeds.placement)
        idx = np.sort(rng.permutation(config.d)[: config.k])
        return idx
    return np.arange(config.k)


def run_replication(config, rep_index):
    """Run every requested method on one simulated dataset.

    Returns a dict mapping method label to (V, R, true discoveries), where
    V counts rejections outside the planted signal set.  Deterministic in
    (config, rep_index).
    """
    seeds = replication_seeds(config.seed, rep_index)
    x_raw = generate_design(config.n, config.d, config.rho, seeds.design)
    signal_idx = _signal_indices(config, seeds)
    beta = np.zeros(config.d)
    beta[signal_idx] = config.amplitude
    tau = math.sqrt(config.tau2_known) if config.tau2_known else 1.0
    noise = np.random.default_rng(seeds.noise).standard_normal(config.n)
    y = x_raw @ beta + tau * noise

    x_unit, _ = normalize_columns(x_raw)
    sigma = gram_matrix(x_unit)
    s = equicorrelated_s(sigma, pd_margin=PD_MARGIN)
    bundle = construct_knockoff(x_unit, s, seeds.knockoff)

    needs_p = any(m in ("bh", "bbh", "abbh") for m in config.methods)
    needs_w = any(m in ("knockoff", "knockoff-plus") for m in config.methods)
    pv = None
    w = None
    if needs_p:
        est = knockoff_estimates(bundle, y, tau2_known=config.tau2_known)
        pv = pvalue_pair(est, bundle)
    if needs_w:
        z, z_tilde = lasso_entry_stats(
            np.hstack([bundle.x, bundle.x_tilde]), y
        )
        w = w_from_z(z, z_tilde)

    signal_set = set(int(i) for i in signal_idx)
    results = {}
    for m in config.methods:
        if m == "bh":
            res = bh(pv.p2, config.alpha)
        elif m == "bbh":
            res = bonferroni_bh(pv.p1, pv.p2, config.alpha)
        elif m == "abbh":
            res = adaptive_bonferroni_bh(
                pv.p1, pv.p2, config.alpha, eta=config.eta
            )
        else:
            res = knockoff_select(w, config.alpha, plus=(m == "knockoff-plus"))
        true_disc = sum(1 for j in res.rejected if int(j) in signal_set)
        results[m] = MethodCounts(
            v=res.r_count - true_disc,
            r=res.r_count,
            true_discoveries=true_disc,
        )
    return results


def summarize(config, outcomes, failed_reps=0):
    """Aggregate per-replication counts into FDR and power estimates.

    ``outcomes`` is a sequence of run_replication results; at least one is
    required.  fdr_hat averages V / max(R, 1); power_hat averages
    (true discoveries) / k and is None when k == 0.
    """
    outcomes = list(outcomes)
    if not outcomes:
        raise KnockfdrError("all replications failed; nothing to summarize")
    per_method = {}
    for m in config.methods:
        counts = [o[m] for o in outcomes]
        fdp = np.array([c.v / max(c.r, 1) for c in counts])
        fdr_hat = float(fdp.mean())
        if fdp.size >= 2:
            stderr = float(fdp.std(ddof=1) / math.sqrt(fdp.size))
        else:
            stderr = 0.0
        power = None
        if config.k >= 1:
            power = float(
                np.mean([c.true_discoveries / config.k for c in counts])
            )
        per_method[m] = MethodSummary(
            method=m,
            fdr_hat=fdr_hat,
            mc_stderr_fdr=stderr,
            power_hat=power,
            mean_rejections=float(np.mean([c.r for c in counts])),
        )
    return ScenarioSummary(
        config=config,
        pi0_true=1.0 - config.k / config.d,
        n_reps=len(outcomes),
        failed_reps=failed_reps,
        per_method=per_method,
    )


def _replication_worker(args):
    config, rep_index = args
    try:
        return ("ok", run_replication(config, rep_index))
    except KnockfdrError as exc:
        return ("failed", f"rep {rep_index}: {exc}")


def run_scenario(config, threads=1):
    """Run all replications of a scenario and summarize.

    Failed replications (e.g. a degenerate sampled design) are dropped and
    counted rather than retried.  ``threads`` > 1 fans replications out to
    a process pool; results are identical to the sequential run.
    """
    jobs = [(config, r) for r in range(config.reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            raw = list(pool.map(_replication_worker, jobs, chunksize=8))
    else:
        raw = [_replication_worker(job) for job in jobs]
    outcomes = [payload for status, payload in raw if status == "ok"]
    failed = sum(1 for status, _ in raw if status == "failed")
    return summarize(config, outcomes, failed_reps=failed)


# Fixed column order of the scenario CSV emitted by the CLI.
CSV_HEADER = (
    "n,d,k,amplitude,alpha,eta,rho,reps,seed,method,"
    "fdr_hat,mc_stderr_fdr,power_hat,mean_rejections,failed_reps"
)


def summary_csv_rows(summary):
    """Render one CSV row per method; power_hat is empty when k == 0."""
    cfg = summary.config
    rows = []
    for m in cfg.methods:
        ms = summary.per_method[m]
        power = "" if ms.power_hat is None else repr(ms.power_hat)
        rows.append(
            f"{cfg.n},{cfg.d},{cfg.k},{repr(float(cfg.amplitude))},"
            f"{repr(float(cfg.alpha))},{repr(float(cfg.eta))},"
            f"{repr(float(cfg.rho))},{cfg.reps},{cfg.seed},{m},"
            f"{repr(ms.fdr_hat)},{repr(ms.mc_stderr_fdr)},{power},"
            f"{repr(ms.mean_rejections)},{summary.failed_reps}"
        )
    return rows
