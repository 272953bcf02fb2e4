"""Domain-adaptation upper bound for the pooled FLD threshold, and the
closed-form target weight that minimizes the weighted bound.

The bound is

    U = Phi(-mu/sigma)
        + 4 sqrt((2 d log(2(n+m+1)) + 2 log(8/delta)) / (n+m))
        + 2m/(n+m) * (dH*/2 + lambda)

where ``dH*`` is a lattice supremum over threshold pairs in ``[0, Delta]^2``
and ``lambda`` is the joint error of the threshold ``Delta/2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core_math import Interval, grid_sup_2d, std_normal_cdf
from .errors import DomainError
from .mixture import MixtureSpec, bayes_error

__all__ = [
    "DEFAULT_SUP_POINTS",
    "BoundInputs",
    "RhoParam",
    "psi",
    "dh_star",
    "lambda_joint",
    "capacity_term",
    "upper_bound_u",
    "weighted_bound_rhs",
    "alpha_star_closed",
    "rho_from_capacity",
]

log = logging.getLogger(__name__)

DEFAULT_SUP_POINTS = 257


@dataclass(frozen=True)
class BoundInputs:
    n: int
    m: int
    spec: MixtureSpec
    delta_conf: float = 0.05
    vc_dim: int = 2
    sup_points: int = field(default=DEFAULT_SUP_POINTS, compare=False)

    def __post_init__(self):
        if not 0.0 < self.delta_conf < 1.0:
            raise DomainError(f"delta_conf must lie in (0, 1), got {self.delta_conf}")
        if self.vc_dim < 1:
            raise DomainError("vc_dim must be at least 1")
        if self.n < 0 or self.m < 0 or self.n + self.m < 1:
            raise DomainError("need n, m >= 0 and n + m >= 1")


@dataclass(frozen=True)
class RhoParam:
    rho: float

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise DomainError(f"rho must be positive and finite, got {self.rho}")


def psi(c, c_prime, mu: float, sigma: float):
    """Target mass of the interval between two thresholds."""
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    hi = np.maximum(c, c_prime)
    lo = np.minimum(c, c_prime)
    F = std_normal_cdf
    # difference per class first, so an empty interval is exactly 0
    out = 0.5 * ((F((hi + mu) / sigma) - F((lo + mu) / sigma)) + (F((hi - mu) / sigma) - F((lo - mu) / sigma)))
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=256)
def dh_star(delta: float, mu: float, sigma: float, points_per_axis: int = DEFAULT_SUP_POINTS) -> float:
    """Twice the largest target/OOD disagreement gap over thresholds in [0, delta]^2."""
    if delta < 0:
        raise DomainError("delta must be nonnegative; pass |delta|")
    if delta == 0:
        return 0.0
    box = Interval(0.0, delta)

    def gap(c, cp):
        return np.abs(psi(c - delta, cp - delta, mu, sigma) - psi(c, cp, mu, sigma))

    return 2.0 * grid_sup_2d(gap, (box, box), points_per_axis, vectorized=True)


def lambda_joint(spec: MixtureSpec) -> float:
    """Target plus OOD error of the threshold halfway between the two tasks."""
    F = std_normal_cdf
    h = spec.delta / 2.0
    return F((-h - spec.mu) / spec.sigma) + F((h - spec.mu) / spec.sigma)


def capacity_term(n_total, vc_dim: int, delta_conf: float):
    """``sqrt(2 d log(2(N+1)) + 2 log(8/delta))``, the VC confidence factor."""
    return np.sqrt(2.0 * vc_dim * np.log(2.0 * (n_total + 1.0)) + 2.0 * math.log(8.0 / delta_conf))


def upper_bound_u(inputs: BoundInputs) -> float:
    n, m, spec = inputs.n, inputs.m, inputs.spec
    total = n + m
    d_h = dh_star(abs(spec.delta), spec.mu, spec.sigma, inputs.sup_points)
    sample_term = 4.0 * capacity_term(total, inputs.vc_dim, inputs.delta_conf) / math.sqrt(total)
    shift_term = (2.0 * m / total) * (0.5 * d_h + lambda_joint(spec))
    return bayes_error(spec) + float(sample_term) + shift_term


def weighted_bound_rhs(alpha, n: int, m: int, vh_minus_log_delta: float, d_h: float):
    """Excess part of the weighted-ERM bound as a function of the target weight.

    ``4 sqrt(alpha^2/n + (1-alpha)^2/m) sqrt(V - log delta) + 2 (1-alpha) d_H``
    """
    a = np.asarray(alpha, dtype=float)
    out = 4.0 * np.sqrt(a * a / n + (1.0 - a) ** 2 / m) * math.sqrt(vh_minus_log_delta) + 2.0 * (1.0 - a) * d_h
    return float(out) if out.ndim == 0 else out


def alpha_star_closed(n: int, m: int, rho: RhoParam) -> float:
    """Minimizer over [0, 1] of the weighted bound, in closed form."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if m == 0:
        log.debug("alpha_star_closed: m = 0, no OOD samples to weigh; returning 1")
        return 1.0
    r2 = rho.rho**2
    if n >= 4.0 * r2:
        return 1.0
    radicand = m * m / (4.0 * r2 * (n + m) - n * m)
    a = n / (n + m) * (1.0 + math.sqrt(radicand))
    return min(max(a, 0.0), 1.0)


def rho_from_capacity(vh_minus_log_delta: float, d_h: float) -> RhoParam:
    if vh_minus_log_delta <= 0 or d_h <= 0:
        raise DomainError("capacity and divergence must both be positive")
    return RhoParam(math.sqrt(vh_minus_log_delta) / d_h)
