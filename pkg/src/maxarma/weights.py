"""Propagation-weight sequence of a Max-ARMA process and the innovation scale.

The lag-tau weight is the largest coefficient with which an innovation can
still influence the process tau steps later: the max over ways of writing tau
as one MA lag plus a sum of AR lags of the corresponding coefficient product.
The reciprocal of the summed weights is the innovation Frechet scale that
makes the process marginally unit Frechet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import weight_dp
from .params import MaxArmaParams

DEFAULT_TRUNCATION = 100
BRUTEFORCE_GUARD = 20


@dataclass(frozen=True)
class WeightSequence:
    """Truncated weight sequence gamma_0..gamma_N plus the innovation scale.

    gamma equals 1 over the truncated weight sum; the truncation error is
    geometric (see :func:`truncation_diagnostic`), so N=100 is accurate for
    coefficients away from the stationarity boundary.
    """

    params: MaxArmaParams
    truncation: int
    gamma_tau: np.ndarray
    gamma: float

    def __post_init__(self):
        self.gamma_tau.setflags(write=False)


def gamma_tau_dp(params, n_trunc):
    """Weights for lags 0..n_trunc via the dynamic program (O(N(p+q)))."""
    if n_trunc < 1:
        raise ValueError(f"truncation must be >= 1, got {n_trunc}")
    alpha = np.asarray(params.alpha, dtype=np.float64)
    beta = np.asarray(params.beta, dtype=np.float64)
    out = weight_dp(alpha, beta, int(n_trunc))
    out.setflags(write=False)
    return out


def gamma_tau_bruteforce(params, tau):
    """Exhaustive-enumeration oracle for the lag-tau weight.

    Enumerates every (j, a_1..a_p) with sum(i * a_i) + j = tau, where a_i may
    be positive only for coefficients with alpha_i > 0, and returns the best
    beta_j times the product of alpha powers (zero when no combination
    exists).  Exponential in tau; guarded to tau <= 20.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau > BRUTEFORCE_GUARD:
        raise ValueError(f"brute force guarded to tau <= {BRUTEFORCE_GUARD}, got {tau}")
    alpha, beta = params.alpha, params.beta
    positive = [i for i in range(1, params.p + 1) if alpha[i - 1] > 0.0]
    best = 0.0
    for j in range(0, min(params.q, tau) + 1):
        stack = [(0, tau - j, 1.0)]
        while stack:
            idx, remaining, prod = stack.pop()
            if idx == len(positive):
                if remaining == 0:
                    v = beta[j] * prod
                    if v > best:
                        best = v
                continue
            lag = positive[idx]
            count = 0
            while count * lag <= remaining:
                stack.append((idx + 1, remaining - count * lag, prod * alpha[lag - 1] ** count))
                count += 1
    return best


def compute_weights(params, n_trunc=DEFAULT_TRUNCATION):
    """Weight sequence together with the innovation scale gamma."""
    g = gamma_tau_dp(params, n_trunc)
    return WeightSequence(params, int(n_trunc), g, 1.0 / float(g.sum()))


def stationarity_scale(params, n_trunc=DEFAULT_TRUNCATION):
    """Innovation Frechet scale gamma = 1 / sum of the truncated weights."""
    return compute_weights(params, n_trunc).gamma


def truncation_diagnostic(params, n_trunc=DEFAULT_TRUNCATION):
    """Relative bound on the weight mass dropped by truncating at n_trunc.

    Uses the geometric envelope r = max_i alpha_i^(1/i): the discarded tail is
    at most gamma_N * r / (1 - r), reported relative to the retained sum.
    Values above 1e-6 suggest increasing the truncation.
    """
    if n_trunc < 2 * params.p:
        raise ValueError(f"diagnostic needs n_trunc >= 2p = {2 * params.p}")
    r = max(a ** (1.0 / i) for i, a in enumerate(params.alpha, start=1))
    if r >= 1.0:
        raise ValueError("geometric envelope rate >= 1; parameters are non-stationary")
    g = gamma_tau_dp(params, n_trunc)
    return float(g[-1] * r / (1.0 - r) / g.sum())
