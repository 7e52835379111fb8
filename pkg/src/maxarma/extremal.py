"""Closed-form limiting extremal measures of a stationary Max-ARMA process.

The extremal index is the innovation scale times the largest MA coefficient.
The lag-kappa asymptotic dependence coefficient sums the smaller of each pair
of weights kappa lags apart, scaled by the innovation scale; it is symmetric
in the sign of the lag, so only kappa >= 1 is computed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .weights import WeightSequence, gamma_tau_dp


class MonotoneShortcutError(ValueError):
    """Raised when the strictly-decreasing-weights shortcut does not apply."""


@dataclass(frozen=True)
class ExtremalSummary:
    theta: float
    chi: dict


def extremal_index(ws: WeightSequence) -> float:
    """theta = gamma * max(beta_0..beta_q), in (0, 1]."""
    return ws.gamma * max(ws.params.beta)


def chi(ws: WeightSequence, kappa: int) -> float:
    """Asymptotic dependence coefficient at lag kappa >= 1.

    Truncates the pairwise-minimum sum at the same index as the gamma sum,
    extending the weight array to reach lag kappa past the truncation point.
    Truncation can only underestimate, so the result is clamped to [0, 1].
    """
    if kappa < 1:
        raise ValueError(f"kappa must be a positive integer, got {kappa}")
    n = ws.truncation
    extended = gamma_tau_dp(ws.params, n + kappa)
    total = float(np.minimum(extended[: n + 1], extended[kappa : kappa + n + 1]).sum())
    return min(max(ws.gamma * total, 0.0), 1.0)


def chi_monotone_shortcut(ws: WeightSequence, kappa: int) -> float:
    """chi via 1 - gamma * (partial weight sum), valid for strictly
    decreasing weights (descending alphas below 1 and descending betas
    below 1).  Checked against the computed weight range."""
    if kappa < 1:
        raise ValueError(f"kappa must be a positive integer, got {kappa}")
    g = ws.gamma_tau
    if not np.all(np.diff(g) < 0.0):
        raise MonotoneShortcutError(
            "weights are not strictly decreasing; the shortcut does not apply"
        )
    return 1.0 - ws.gamma * float(g[:kappa].sum())


def extremal_summary(ws: WeightSequence, kappa_max: int) -> ExtremalSummary:
    """theta plus chi at lags 1..kappa_max (chi at -kappa equals chi at kappa)."""
    if kappa_max < 1:
        raise ValueError("kappa_max must be >= 1")
    n = ws.truncation
    extended = gamma_tau_dp(ws.params, n + kappa_max)
    head = extended[: n + 1]
    out = {}
    for k in range(1, kappa_max + 1):
        total = float(np.minimum(head, extended[k : k + n + 1]).sum())
        out[k] = min(max(ws.gamma * total, 0.0), 1.0)
    return ExtremalSummary(theta=extremal_index(ws), chi=out)
