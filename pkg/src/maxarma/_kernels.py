"""Compiled inner loops. Falls back to pure Python when numba is unavailable.

Both code paths perform identical IEEE multiply/compare sequences, so results
are bit-identical with or without numba.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def weight_dp(alpha, beta, n_trunc):
    """Dynamic program for the propagation weights of lags 0..n_trunc.

    ar_max[tau] is the largest product of AR coefficients over compositions of
    tau into parts i with alpha[i-1] > 0 (zero when tau has no such
    composition).  The lag-tau weight is the best of beta[j] * ar_max[tau-j].
    """
    p = alpha.shape[0]
    q = beta.shape[0] - 1
    ar_max = np.zeros(n_trunc + 1)
    ar_max[0] = 1.0
    for tau in range(1, n_trunc + 1):
        best = 0.0
        imax = p if p < tau else tau
        for i in range(1, imax + 1):
            v = alpha[i - 1] * ar_max[tau - i]
            if v > best:
                best = v
        ar_max[tau] = best
    out = np.empty(n_trunc + 1)
    for tau in range(n_trunc + 1):
        jmax = q if q < tau else tau
        best = 0.0
        for j in range(jmax + 1):
            v = beta[j] * ar_max[tau - j]
            if v > best:
                best = v
        out[tau] = best
    return out


@njit(cache=True)
def max_recursion(alpha, beta, x, z):
    """In-place max-recursion over x[p:] given innovations z.

    x[:p] must be pre-filled with the initial values.  z is laid out so that
    the innovation entering at step s with MA lag j is z[q + s - j].
    """
    p = alpha.shape[0]
    q = beta.shape[0] - 1
    total = x.shape[0]
    for s in range(p, total):
        best = 0.0
        for i in range(p):
            v = alpha[i] * x[s - 1 - i]
            if v > best:
                best = v
        for j in range(q + 1):
            v = beta[j] * z[q + s - j]
            if v > best:
                best = v
        x[s] = best
    return x
