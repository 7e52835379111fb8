"""Max-ARMA parameter vectors, constraint checking, and the orthogonalised
reparametrisation used for inference.

A Max-ARMA(p, q) value is the max of scaled lagged values and scaled
innovations.  Stationarity requires every AR coefficient below 1; for
inference the parameter space is further restricted so that no coefficient is
redundant (a coefficient at or below its identifiability floor never decides
the max and leaves sample paths unchanged).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    """Raised when parameter vectors violate model-definition constraints."""


class InfeasibleReparamError(ParameterError):
    """Raised when a reparametrised point maps outside the stationary region.

    The optimizer treats this as a rejection signal.
    """


@dataclass(frozen=True)
class MaxArmaOrder:
    p: int
    q: int

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise ParameterError("order (p, q) must be integers")
        if self.p < 1 or self.q < 0:
            raise ParameterError(f"order requires p >= 1 and q >= 0, got ({self.p}, {self.q})")


@dataclass(frozen=True)
class MaxArmaParams:
    """Coefficients of a stationary Max-ARMA(p, q) process.

    alpha holds the p AR coefficients, beta the q+1 MA coefficients with the
    leading entry fixed to 1.  Construction enforces the stationarity bounds
    (all alpha in [0, 1) with alpha_p > 0) and MA sign constraints; membership
    of the stricter inference space is reported by :func:`validate_theta`.
    """

    order: MaxArmaOrder
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        p, q = self.order.p, self.order.q
        if len(self.alpha) != p:
            raise ParameterError(f"alpha has {len(self.alpha)} entries, expected p={p}")
        if len(self.beta) != q + 1:
            raise ParameterError(f"beta has {len(self.beta)} entries, expected q+1={q + 1}")
        if self.beta[0] != 1.0:
            raise ParameterError(f"beta_0 must equal 1, got {self.beta[0]}")
        for i, a in enumerate(self.alpha, start=1):
            if not np.isfinite(a) or a < 0.0 or a >= 1.0:
                raise ParameterError(f"stationarity requires 0 <= alpha_{i} < 1, got {a}")
        if self.alpha[-1] <= 0.0:
            raise ParameterError(f"alpha_p must be positive, got {self.alpha[-1]}")
        for j, b in enumerate(self.beta[1:], start=1):
            if not np.isfinite(b) or b < 0.0:
                raise ParameterError(f"beta_{j} must be non-negative, got {b}")
        if q >= 1 and self.beta[q] <= 0.0:
            raise ParameterError(f"beta_q must be positive, got {self.beta[q]}")

    @property
    def p(self):
        return self.order.p

    @property
    def q(self):
        return self.order.q

    @classmethod
    def from_coefficients(cls, alpha, ma=()):
        """Build from AR coefficients and the MA tail (beta_1..beta_q)."""
        alpha = tuple(alpha)
        ma = tuple(ma)
        return cls(MaxArmaOrder(len(alpha), len(ma)), alpha, (1.0,) + ma)

    def to_dict(self):
        return {"p": self.p, "q": self.q, "alpha": list(self.alpha), "beta": list(self.beta)}

    @classmethod
    def from_dict(cls, d):
        order = MaxArmaOrder(int(d["p"]), int(d["q"]))
        return cls(order, tuple(d["alpha"]), tuple(d["beta"]))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ReparamParams:
    """Point in the shifted (delta, epsilon) space.

    delta_i is alpha_i minus its identifiability floor (delta_1 = alpha_1);
    epsilon_j is beta_j minus alpha_j up to lag min(p, q) and beta_j beyond.
    Coordinates are box constraints only, which is what makes this space
    convenient for derivative-free optimisation.
    """

    order: MaxArmaOrder
    delta: tuple
    epsilon: tuple

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        object.__setattr__(self, "epsilon", tuple(float(e) for e in self.epsilon))
        if len(self.delta) != self.order.p:
            raise ParameterError(f"delta has {len(self.delta)} entries, expected p={self.order.p}")
        if len(self.epsilon) != self.order.q:
            raise ParameterError(
                f"epsilon has {len(self.epsilon)} entries, expected q={self.order.q}"
            )


def identifiability_floor(alpha, k):
    """Largest product alpha_i * alpha_{k-i} over i = 1..floor(k/2).

    A coefficient alpha_k at or below this value never attains the max in the
    recursion, so it has no effect on sample paths.
    """
    alpha = tuple(alpha)
    if k < 2 or k > len(alpha):
        raise ParameterError(f"floor index k={k} outside 2..{len(alpha)}")
    return max(alpha[i - 1] * alpha[k - i - 1] for i in range(1, k // 2 + 1))


def theta_space_report(alpha, beta):
    """Report violations of the identifiable-parameter space for raw vectors.

    Returns an empty list iff (alpha, beta) lies in the inference parameter
    space: stationarity bounds, non-strict identifiability floors for i < p,
    a strict floor for alpha_p, beta_j >= alpha_j for j <= min(p, q-1), and a
    strict lower bound on beta_q.  beta includes the leading beta_0 = 1.
    """
    alpha = tuple(float(a) for a in alpha)
    beta = tuple(float(b) for b in beta)
    p, q = len(alpha), len(beta) - 1
    report = []
    if not 0.0 <= alpha[0] < 1.0:
        report.append(f"0 <= alpha_1 < 1 fails (alpha_1={alpha[0]})")
    for i in range(2, p + 1):
        floor = identifiability_floor(alpha, i)
        if alpha[i - 1] >= 1.0:
            report.append(f"alpha_{i} < 1 fails (alpha_{i}={alpha[i - 1]})")
        if i < p:
            if alpha[i - 1] < floor:
                report.append(
                    f"alpha_{i} >= floor fails (alpha_{i}={alpha[i - 1]}, floor={floor})"
                )
        elif alpha[i - 1] <= floor:
            report.append(f"alpha_p > floor fails (alpha_{p}={alpha[i - 1]}, floor={floor})")
    if p == 1 and alpha[0] <= 0.0:
        report.append(f"alpha_p > 0 fails (alpha_1={alpha[0]})")
    for j in range(1, min(p, q - 1) + 1):
        if beta[j] < alpha[j - 1]:
            report.append(f"beta_{j} >= alpha_{j} fails (beta_{j}={beta[j]}, alpha_{j}={alpha[j - 1]})")
    if q >= 1:
        if p >= q:
            bound = max(alpha[q - 1], 0.0)
            if beta[q] <= bound:
                report.append(f"beta_q > max(alpha_q, 0) fails (beta_{q}={beta[q]}, bound={bound})")
        elif beta[q] <= 0.0:
            report.append(f"beta_q > 0 fails (beta_{q}={beta[q]})")
    return report


def validate_theta(params):
    """Theta-space report for a constructed parameter object (empty = member)."""
    return theta_space_report(params.alpha, params.beta)


def to_reparam(params, check=True):
    """Map (alpha, beta) to the shifted (delta, epsilon) coordinates.

    With check=True (default) the point must lie in the identifiable space;
    the shift is still well defined outside it but produces negative deltas.
    """
    if check:
        report = validate_theta(params)
        if report:
            raise ParameterError(
                "params outside the identifiable space: " + "; ".join(report)
            )
    p, q = params.p, params.q
    alpha, beta = params.alpha, params.beta
    delta = [alpha[0]]
    for i in range(2, p + 1):
        delta.append(alpha[i - 1] - identifiability_floor(alpha, i))
    epsilon = []
    for j in range(1, q + 1):
        epsilon.append(beta[j] - alpha[j - 1] if j <= p else beta[j])
    return ReparamParams(params.order, tuple(delta), tuple(epsilon))


def from_reparam(rp):
    """Invert the reparametrisation, recovering alpha recursively in i.

    Raises InfeasibleReparamError when the recovered coefficients break the
    stationarity or sign constraints (the optimizer's rejection signal).
    The arithmetic mirrors to_reparam exactly, so round trips are exact.
    """
    p, q = rp.order.p, rp.order.q
    alpha = [rp.delta[0]]
    for i in range(2, p + 1):
        # the floor at index i only reads alpha_1..alpha_{i-1}; pad to length i
        alpha.append(rp.delta[i - 1] + identifiability_floor(alpha + [0.0], i))
    beta = [1.0]
    for j in range(1, q + 1):
        beta.append(rp.epsilon[j - 1] + alpha[j - 1] if j <= p else rp.epsilon[j - 1])
    bad = [f"alpha_{i} = {a}" for i, a in enumerate(alpha, start=1) if not 0.0 <= a < 1.0]
    if alpha[-1] <= 0.0:
        bad.append(f"alpha_p = {alpha[-1]} <= 0")
    if any(b < 0.0 for b in beta[1:]) or (q >= 1 and beta[q] <= 0.0):
        bad.append(f"beta = {beta}")
    if bad:
        raise InfeasibleReparamError("back-transform infeasible: " + "; ".join(bad))
    return MaxArmaParams(rp.order, tuple(alpha), tuple(beta))


def in_reparam_space(rp):
    """Sign conditions of the shifted space: deltas and epsilons non-negative
    with the last entry of each strictly positive."""
    d, e = rp.delta, rp.epsilon
    if any(x < 0.0 for x in d) or d[-1] <= 0.0:
        return False
    if e and (any(x < 0.0 for x in e) or e[-1] <= 0.0):
        return False
    return True
