"""Sub-asymptotic empirical estimators of extremal dependence.

All estimators are exceedance-indicator based with strict inequality (ties at
the threshold count as non-exceedances), so with quantile thresholds they are
invariant to strictly increasing marginal transforms.  The lagged min-ratio
statistic is the exception: it uses the raw values and is always meant to be
computed on Frechet-scale data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats


class InsufficientExceedancesError(ValueError):
    def __init__(self, message, count=0):
        super().__init__(message)
        self.count = count


class NoExtremePairsError(ValueError):
    def __init__(self, message, lag=None):
        super().__init__(message)
        self.lag = lag


@dataclass(frozen=True)
class ThresholdSpec:
    """Threshold given either as a probability level or in data units."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("quantile", "absolute"):
            raise ValueError(f"threshold kind must be quantile or absolute, got {self.kind}")
        if self.kind == "quantile" and not 0.0 < self.value < 1.0:
            raise ValueError(f"quantile probability must lie in (0, 1), got {self.value}")

    @classmethod
    def quantile(cls, prob):
        return cls("quantile", float(prob))

    @classmethod
    def absolute(cls, level):
        return cls("absolute", float(level))

    def resolve(self, series):
        """Threshold level in data units.

        Quantiles use the order statistic at ceil(n * prob) so resolved
        thresholds are reproducible bit-for-bit.
        """
        if self.kind == "absolute":
            return self.value
        series = np.asarray(series)
        k = int(np.ceil(len(series) * self.value))
        k = min(max(k, 1), len(series))
        return float(np.partition(series, k - 1)[k - 1])


def resolve_threshold(series, u):
    if isinstance(u, ThresholdSpec):
        return u.resolve(series)
    return float(u)


@dataclass(frozen=True)
class RatioEstimate:
    """A count-ratio estimate with its integer numerator and denominator."""

    estimate: float
    numerator: int
    denominator: int
    ci: Optional[tuple] = None


@dataclass(frozen=True)
class EmpiricalMeasures:
    u: float
    theta_hat: RatioEstimate
    chi_hat: dict
    run_length: int


def chi_hat(series, u, kappa, ci_level=0.95):
    """Conditional exceedance proportion at lag kappa with a binomial CI.

    Proportion of exceedances at t <= n - kappa that are followed by an
    exceedance kappa steps later; the Clopper-Pearson interval from the
    binomial sampling distribution is attached.
    """
    if kappa < 1:
        raise ValueError(f"kappa must be a positive integer, got {kappa}")
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n <= kappa:
        raise ValueError(f"series length {n} must exceed the lag {kappa}")
    level = resolve_threshold(x, u)
    exc = x > level
    base = exc[: n - kappa]
    denominator = int(base.sum())
    if denominator == 0:
        raise InsufficientExceedancesError(
            f"no exceedances of u={level} among t <= n - {kappa}", count=0
        )
    numerator = int((base & exc[kappa:]).sum())
    return RatioEstimate(
        estimate=numerator / denominator,
        numerator=numerator,
        denominator=denominator,
        ci=_clopper_pearson(numerator, denominator, ci_level),
    )


def theta_hat_runs(series, u, run_length=1, n_boot=1000, ci_level=0.95, seed=0):
    """Runs estimator of the extremal index with a block-bootstrap CI.

    Proportion of exceedances followed by run_length consecutive
    non-exceedances.  The interval comes from a stationary (geometric block)
    bootstrap with mean block length 1 / theta-hat, which matches the implied
    cluster scale; resamples use per-resample derived seeds, so results are
    deterministic.  Pass n_boot=0 to skip the bootstrap.
    """
    if run_length < 1:
        raise ValueError(f"run length must be a positive integer, got {run_length}")
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n <= run_length:
        raise ValueError(f"series length {n} must exceed the run length {run_length}")
    level = resolve_threshold(x, u)
    exc = x > level
    numerator, denominator = _runs_counts(exc, run_length)
    if denominator == 0:
        raise InsufficientExceedancesError(
            f"no exceedances of u={level} among t <= n - {run_length}", count=0
        )
    point = numerator / denominator
    ci = None
    if point == 0.0:
        warnings.warn(
            "every exceedance cluster runs to the series end; "
            "theta-hat is degenerate at 0",
            RuntimeWarning,
            stacklevel=2,
        )
    elif n_boot > 0:
        draws = np.empty(n_boot)
        mean_block = 1.0 / point
        for b, child in enumerate(np.random.SeedSequence(seed).spawn(n_boot)):
            rng = np.random.default_rng(child)
            idx = _stationary_bootstrap_indices(n, mean_block, rng)
            num_b, den_b = _runs_counts(exc[idx], run_length)
            draws[b] = num_b / den_b if den_b else np.nan
        tail = 100.0 * (1.0 - ci_level) / 2.0
        lo, hi = np.nanpercentile(draws, [tail, 100.0 - tail])
        ci = (min(float(lo), point), max(float(hi), point))
    return RatioEstimate(estimate=point, numerator=numerator, denominator=denominator, ci=ci)


def davis_ratio_min(series, u_level, lag):
    """Smallest ratio x_t / x_{t-lag} over pairs with both sides above u.

    On exact Max-ARMA data this attains the AR coefficient at that lag with
    probability approaching one.  Returns (ratio, number of pairs).
    """
    if lag < 1:
        raise ValueError(f"lag must be a positive integer, got {lag}")
    x = np.asarray(series, dtype=np.float64)
    if len(x) <= lag:
        raise ValueError(f"series length {len(x)} must exceed the lag {lag}")
    mask = np.minimum(x[lag:], x[:-lag]) > u_level
    count = int(mask.sum())
    if count == 0:
        raise NoExtremePairsError(f"no extreme pairs at lag {lag} above u={u_level}", lag=lag)
    ratios = x[lag:][mask] / x[:-lag][mask]
    return float(ratios.min()), count


def pearson_acf(series, kappa):
    """Lag-kappa sample autocorrelation (body-dependence diagnostic)."""
    if kappa < 1:
        raise ValueError(f"kappa must be a positive integer, got {kappa}")
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if n <= kappa:
        raise ValueError(f"series length {n} must exceed the lag {kappa}")
    centred = x - x.mean()
    denom = float(np.dot(centred, centred))
    if denom == 0.0:
        raise ValueError("series has zero variance")
    return float(np.dot(centred[: n - kappa], centred[kappa:]) / denom)


def decay_change_lag(chi_curve, max_lag=None, min_lag=1, window=3, tol=1e-8):
    """First lag at which the log-scale decay of the chi curve decelerates.

    Scans second differences of log(chi-hat): a candidate lag needs a second
    difference above tol (the decay ratio strictly increases) that does not
    re-accelerate below -tol within the persistence window.  A geometric
    curve has constant decay ratio, hence no candidate.  Advisory only; falls
    back to max_lag with a warning when no change point is found.
    """
    curve = dict(chi_curve)
    lags = sorted(curve)
    if max_lag is None:
        max_lag = lags[-1]
    usable = [k for k in lags if k <= max_lag and curve[k] > 0.0]
    if len(usable) < 3 or usable != list(range(usable[0], usable[0] + len(usable))):
        warnings.warn(
            "chi curve too short or not on consecutive positive lags; "
            "returning max_lag",
            RuntimeWarning,
            stacklevel=2,
        )
        return max_lag
    logs = {k: np.log(curve[k]) for k in usable}
    first, last = usable[0], usable[-1]
    candidates = range(max(min_lag, first + 1), last)
    for k in candidates:
        d2 = logs[k + 1] - 2.0 * logs[k] + logs[k - 1]
        if d2 <= tol:
            continue
        horizon = range(k + 1, min(k + window, last))
        if all(logs[j + 1] - 2.0 * logs[j] + logs[j - 1] >= -tol for j in horizon):
            return k
    warnings.warn(
        "no deceleration of the chi decay found; returning max_lag",
        RuntimeWarning,
        stacklevel=2,
    )
    return max_lag


def empirical_measures(series, u, kappas, run_length=1, n_boot=0, ci_level=0.95, seed=0):
    """Bundle of theta-hat and chi-hat estimates at one threshold."""
    x = np.asarray(series, dtype=np.float64)
    level = resolve_threshold(x, u)
    theta = theta_hat_runs(
        x, level, run_length=run_length, n_boot=n_boot, ci_level=ci_level, seed=seed
    )
    chis = {int(k): chi_hat(x, level, int(k), ci_level=ci_level) for k in kappas}
    return EmpiricalMeasures(u=level, theta_hat=theta, chi_hat=chis, run_length=run_length)


def _runs_counts(exc, run_length):
    """Numerator and denominator of the runs estimator on an indicator array."""
    n = len(exc)
    base = exc[: n - run_length]
    hits = base.copy()
    for j in range(1, run_length + 1):
        hits = hits & ~exc[j : n - run_length + j]
    return int(hits.sum()), int(base.sum())


def _clopper_pearson(k, m, level):
    tail = (1.0 - level) / 2.0
    lo = 0.0 if k == 0 else float(stats.beta.ppf(tail, k, m - k + 1))
    hi = 1.0 if k == m else float(stats.beta.ppf(1.0 - tail, k + 1, m - k))
    return (lo, hi)


def _stationary_bootstrap_indices(n, mean_block, rng):
    """Politis-Romano stationary bootstrap: geometric blocks, circular wrap."""
    p_geo = min(1.0, 1.0 / mean_block)
    idx = np.empty(n, dtype=np.int64)
    pos = 0
    while pos < n:
        start = int(rng.integers(n))
        length = min(int(rng.geometric(p_geo)), n - pos)
        block = np.arange(start, start + length) % n
        idx[pos : pos + length] = block
        pos += length
    return idx
