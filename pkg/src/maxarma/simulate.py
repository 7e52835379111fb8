"""Seeded simulation of stationary Max-ARMA sample paths on unit Frechet
margins.

Innovations are drawn with the scale that makes the process marginally unit
Frechet.  The first p values cannot be drawn from their (complex) joint law,
so they are drawn independently with the correct margin and a burn-in window
is discarded to recover the stationary dependence structure.

Streams come from numpy's PCG64 (``default_rng``); numpy guarantees stream
stability for a fixed bit generator, so a seed pins the output bit-for-bit.
Draw order: the full innovation block first, then the p initial values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import max_recursion
from .params import MaxArmaParams
from .weights import DEFAULT_TRUNCATION, stationarity_scale

DEFAULT_BURN_IN = 1000


@dataclass(frozen=True)
class SimulationConfig:
    params: MaxArmaParams
    n: int
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"series length must be positive, got {self.n}")
        minimum = max(0, self.params.q - min(self.params.p, self.params.q))
        if self.burn_in < minimum:
            raise ValueError(f"burn-in {self.burn_in} below the minimum {minimum}")


@dataclass(frozen=True)
class SimulatedSeries:
    """Simulated path plus (optionally) the innovations that drove it.

    values[t] for t = 0..n-1 is the retained path.  When kept, innovations
    has length n + q with innovations[q + t - j] the innovation entering
    values[t] at MA lag j, i.e. it starts q steps before the retained window.
    """

    values: np.ndarray
    innovations: Optional[np.ndarray]
    config: SimulationConfig

    def __post_init__(self):
        self.values.setflags(write=False)
        if self.innovations is not None:
            self.innovations.setflags(write=False)


def sample_frechet(scale, count, rng):
    """Inverse-CDF Frechet(scale) draws: z = -scale / log(u), u in (0, 1)."""
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    u = rng.random(count)
    # u = 0 occurs with probability 2^-53 per draw; nudge to keep z finite
    return -scale / np.log(np.where(u > 0.0, u, 2.0**-53))


def simulate(config, keep_innovations=False, truncation=DEFAULT_TRUNCATION):
    """Simulate n values of the stationary process, discarding the burn-in.

    Deterministic given the seed: identical config implies bit-identical
    output.  The recursion is sequential and is not parallelised; run
    independent seeds for parallel streams.
    """
    params = config.params
    p, q = params.p, params.q
    gamma = stationarity_scale(params, truncation)
    total = config.burn_in + config.n
    rng = np.random.default_rng(config.seed)
    # z[q + s] is the innovation at internal step s, for s = -q..total-1
    z = sample_frechet(gamma, total + q, rng)
    x = np.empty(total)
    head = min(p, total)
    x[:head] = sample_frechet(1.0, p, rng)[:head]
    if total > p:
        max_recursion(
            np.asarray(params.alpha, dtype=np.float64),
            np.asarray(params.beta, dtype=np.float64),
            x,
            z,
        )
    values = x[config.burn_in :].copy()
    innovations = z[config.burn_in :].copy() if keep_innovations else None
    return SimulatedSeries(values=values, innovations=innovations, config=config)


def to_gumbel(series):
    """Log-transform to the standard Gumbel marginal scale."""
    values = series.values if isinstance(series, SimulatedSeries) else np.asarray(series)
    if np.any(values <= 0.0):
        raise ValueError("Gumbel transform requires strictly positive values")
    return np.log(values)
