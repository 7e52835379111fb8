"""Semiparametric marginal model: empirical body, Pareto tail.

Above a threshold u_M the survivor function is d * (u_M / y)^c with c the
Hill estimate (reciprocal mean log-excess) and d the exceedance proportion.
Below u_M the empirical distribution function is linearly interpolated
between jumps so the fitted CDF is continuous, strictly increasing, and has a
single-valued inverse; this is what makes the probability integral transform
to and from unit Frechet margins a bijection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .empirical import ThresholdSpec, resolve_threshold


class MarginalError(ValueError):
    """Raised for invalid marginal-model inputs or unusable thresholds."""


@dataclass(frozen=True)
class MarginalModel:
    """Fitted marginal distribution with Pareto tail above u_m.

    body_y / body_prob are the interpolation knots of the sub-threshold CDF:
    (0, 0), the distinct order statistics below u_m at plotting positions
    i/(n+1), and the junction (u_m, 1-d).  The tail branch continues from the
    junction, so the CDF is continuous at u_m.
    """

    u_m: float
    c: float
    d: float
    sorted_sample: np.ndarray
    n: int
    n_u: int
    body_y: np.ndarray
    body_prob: np.ndarray

    def __post_init__(self):
        self.sorted_sample.setflags(write=False)
        self.body_y.setflags(write=False)
        self.body_prob.setflags(write=False)


def fit_marginal(data, threshold):
    """Fit the empirical-below / Pareto-above marginal model.

    threshold is a level in data units or a ThresholdSpec; it must be
    positive, lie strictly inside the sample range, and leave at least two
    exceedances.  All data must be positive and finite.
    """
    y = np.asarray(data, dtype=np.float64)
    if y.ndim != 1 or len(y) < 3:
        raise MarginalError("data must be a one-dimensional sample of length >= 3")
    if not np.all(np.isfinite(y)):
        raise MarginalError("data contains non-finite values")
    if np.any(y <= 0.0):
        raise MarginalError("marginal model requires strictly positive data")
    u_m = resolve_threshold(y, threshold)
    if u_m <= 0.0:
        raise MarginalError(f"threshold must be positive, got {u_m}")
    if not y.min() < u_m < y.max():
        raise MarginalError(f"threshold {u_m} must lie strictly inside the sample range")
    exceedances = y[y > u_m]
    n, n_u = len(y), len(exceedances)
    if n_u < 2:
        raise MarginalError(f"need at least 2 exceedances of u_M={u_m}, got {n_u}")
    c = 1.0 / float(np.mean(np.log(exceedances / u_m)))
    d = n_u / n
    sorted_sample = np.sort(y)
    body_y, body_prob = _body_knots(sorted_sample, u_m, d)
    return MarginalModel(
        u_m=float(u_m),
        c=c,
        d=d,
        sorted_sample=sorted_sample,
        n=n,
        n_u=n_u,
        body_y=body_y,
        body_prob=body_prob,
    )


def _body_knots(sorted_sample, u_m, d):
    """Interpolation knots (0,0) .. (u_m, 1-d) for the sub-threshold CDF.

    Order statistics get plotting positions i/(n+1); tied values keep the
    largest position so the knot sequence stays strictly increasing in y.
    Positions below u_m are always under 1-d, so monotonicity holds through
    the junction.
    """
    n = len(sorted_sample)
    below = sorted_sample < u_m
    ys = sorted_sample[below]
    probs = (np.flatnonzero(below) + 1.0) / (n + 1.0)
    if len(ys):
        keep_last = np.r_[ys[1:] != ys[:-1], True]
        ys, probs = ys[keep_last], probs[keep_last]
    body_y = np.concatenate([[0.0], ys, [u_m]])
    body_prob = np.concatenate([[0.0], probs, [1.0 - d]])
    return body_y, body_prob


def cdf(model, y):
    """Fitted CDF: interpolated-empirical below u_m, Pareto tail above."""
    arr = np.asarray(y, dtype=np.float64)
    body = np.interp(np.clip(arr, 0.0, None), model.body_y, model.body_prob)
    with np.errstate(divide="ignore", over="ignore"):
        tail = 1.0 - model.d * (model.u_m / np.where(arr > 0, arr, np.inf)) ** model.c
    out = np.where(arr >= model.u_m, tail, body)
    return out if out.ndim else float(out)


def inverse_cdf(model, prob):
    """Quantile function of the fitted CDF (defined on (0, 1))."""
    v = np.asarray(prob, dtype=np.float64)
    if np.any(v <= 0.0) or np.any(v >= 1.0):
        raise MarginalError("probabilities must lie strictly inside (0, 1)")
    body = np.interp(v, model.body_prob, model.body_y)
    tail = model.u_m * (model.d / (1.0 - v)) ** (1.0 / model.c)
    out = np.where(v >= 1.0 - model.d, tail, body)
    return out if out.ndim else float(out)


def to_frechet(model, y):
    """Probability integral transform onto unit Frechet margins."""
    arr = np.asarray(y, dtype=np.float64)
    if np.any(arr <= 0.0):
        raise MarginalError("transform requires strictly positive values")
    out = -1.0 / np.log(cdf(model, arr))
    return out if out.ndim else float(out)


def from_frechet(model, x):
    """Inverse transform from unit Frechet back to the data scale."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr <= 0.0):
        raise MarginalError("Frechet-scale values must be positive")
    return inverse_cdf(model, np.exp(-1.0 / arr))


@dataclass(frozen=True)
class QQData:
    """Tail QQ data on the Gumbel scale with pointwise tolerance bounds."""

    probs: np.ndarray
    model_q: np.ndarray
    empirical_q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def qq_data(model, data=None, n_rep=1000, seed=0, level=0.95):
    """QQ pairs for the exceedances under the fitted Pareto tail.

    Exceedances are mapped to the Gumbel scale through the fitted model and
    compared with the conditional tail quantiles at plotting positions
    (i - 0.5) / n_u.  Tolerance bounds are pointwise percentile envelopes of
    order statistics simulated from the fitted tail.
    """
    if data is None:
        exceedances = model.sorted_sample[model.sorted_sample > model.u_m]
    else:
        arr = np.asarray(data, dtype=np.float64)
        exceedances = np.sort(arr[arr > model.u_m])
    n_exc = len(exceedances)
    if n_exc < 5:
        raise MarginalError(f"QQ diagnostics need at least 5 exceedances, got {n_exc}")
    probs = (np.arange(1, n_exc + 1) - 0.5) / n_exc

    def tail_gumbel(prob):
        # conditional tail quantile mapped through T(y) and log
        return -np.log(-np.log(1.0 - model.d * (1.0 - prob)))

    model_q = tail_gumbel(probs)
    empirical_q = np.log(to_frechet(model, exceedances))
    rng = np.random.default_rng(seed)
    sims = np.sort(rng.random((n_rep, n_exc)), axis=1)
    sims = tail_gumbel(sims)
    tail_pct = 100.0 * (1.0 - level) / 2.0
    lower, upper = np.percentile(sims, [tail_pct, 100.0 - tail_pct], axis=0)
    return QQData(probs=probs, model_q=model_q, empirical_q=empirical_q, lower=lower, upper=upper)


def save_marginal_model(model, path, sample_path=None):
    """Serialize the model to JSON, with the sorted sample in a side file."""
    path = Path(path)
    if sample_path is None:
        sample_path = path.with_suffix(".sample.txt")
    sample_path = Path(sample_path)
    sample_path.write_text("\n".join(repr(v) for v in model.sorted_sample) + "\n")
    payload = {
        "u_m": model.u_m,
        "c": model.c,
        "d": model.d,
        "n": model.n,
        "n_u": model.n_u,
        "sample_file": sample_path.name,
    }
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def load_marginal_model(path):
    path = Path(path)
    payload = json.loads(path.read_text())
    sample_path = path.parent / payload["sample_file"]
    sorted_sample = np.array([float(line) for line in sample_path.read_text().split()])
    body_y, body_prob = _body_knots(sorted_sample, payload["u_m"], payload["d"])
    return MarginalModel(
        u_m=payload["u_m"],
        c=payload["c"],
        d=payload["d"],
        sorted_sample=sorted_sample,
        n=int(payload["n"]),
        n_u=int(payload["n_u"]),
        body_y=body_y,
        body_prob=body_prob,
    )
