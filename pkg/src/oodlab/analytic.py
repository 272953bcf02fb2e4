"""Closed-form expected target error of the pooled and the weighted FLD threshold.

The fitted threshold is Gaussian, so averaging the conditional risk over it
uses the identity E[Phi(a Z + b)] = Phi(b / sqrt(1 + a^2)). Everything is
computed in sigma-normalized units.

Sample counts ``n`` and ``m`` may be Python ints or integer arrays (which
broadcast), but never floats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_math import std_normal_cdf
from .errors import DomainError
from .mixture import MixtureSpec, conditional_target_error

__all__ = [
    "ThresholdStats",
    "MseDecomposition",
    "threshold_stats_agnostic",
    "expected_error_agnostic",
    "threshold_stats_weighted",
    "expected_error_weighted",
    "mse_decomposition",
    "limit_error_infinite_ood",
]


@dataclass(frozen=True)
class ThresholdStats:
    mean: float
    variance: float


@dataclass(frozen=True)
class MseDecomposition:
    bias: float
    variance: float
    mse: float


def _counts(name, value):
    if isinstance(value, (bool, np.bool_)):
        raise DomainError(f"{name} must be an integer count")
    if isinstance(value, (int, np.integer)):
        if value < 0:
            raise DomainError(f"{name} must be nonnegative, got {value}")
        return value
    arr = np.asarray(value)
    if arr.dtype.kind not in "iu":
        raise DomainError(f"{name} must be an integer count, got {value!r}")
    if (arr < 0).any():
        raise DomainError(f"{name} must be nonnegative")
    return arr


def _pair(n, m, min_total=2):
    n = _counts("n", n)
    m = _counts("m", m)
    if np.any(np.asarray(n) + np.asarray(m) < min_total):
        raise DomainError(f"n + m must be at least {min_total}")
    return n, m


def _scalarize(x):
    return float(x) if np.ndim(x) == 0 else x


def _alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if not np.all((a >= 0.0) & (a <= 1.0)):
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    return a if a.ndim else float(a)


def _avg_error(mean_std, var_std, mu_std):
    # E over c ~ N(mean, var) of 1/2 [1 + Phi(c - mu) - Phi(c + mu)], unit sigma
    r = np.sqrt(1.0 + var_std)
    return 0.5 * (std_normal_cdf((mean_std - mu_std) / r) + std_normal_cdf((-mean_std - mu_std) / r))


def threshold_stats_agnostic(n, m, spec: MixtureSpec) -> ThresholdStats:
    n, m = _pair(n, m)
    total = n + m
    return ThresholdStats(_scalarize(m * spec.delta / total), _scalarize(spec.sigma**2 / total))


def expected_error_agnostic(n, m, spec: MixtureSpec):
    """Expected target 0-1 error of the pooled-FLD threshold."""
    n, m = _pair(n, m)
    total = np.asarray(n + m, dtype=float)
    d, mu = spec.delta_std, spec.mu_std
    root = np.sqrt(total * (total + 1.0))
    out = 0.5 * (
        std_normal_cdf((m * d - total * mu) / root) + std_normal_cdf((-m * d - total * mu) / root)
    )
    return _scalarize(out)


def _weighted_moments(n, m, alpha):
    a = alpha
    eff = a * n + (1.0 - a) * m
    if np.any(np.asarray(eff) <= 0.0):
        raise DomainError("alpha*n + (1-alpha)*m must be positive")
    frac_ood = (1.0 - a) * m / eff
    var_unit = (a * a * n + (1.0 - a) ** 2 * m) / eff**2
    return frac_ood, var_unit


def threshold_stats_weighted(n, m, alpha, spec: MixtureSpec) -> ThresholdStats:
    n = _counts("n", n)
    m = _counts("m", m)
    frac_ood, var_unit = _weighted_moments(n, m, _alpha(alpha))
    return ThresholdStats(_scalarize(frac_ood * spec.delta), _scalarize(var_unit * spec.sigma**2))


def expected_error_weighted(n, m, alpha, spec: MixtureSpec):
    """Expected target error of the weighted-FLD threshold; ``alpha`` may be an array."""
    n = _counts("n", n)
    m = _counts("m", m)
    frac_ood, var_unit = _weighted_moments(n, m, _alpha(alpha))
    return _scalarize(_avg_error(frac_ood * spec.delta_std, var_unit, spec.mu_std))


def mse_decomposition(n, m, spec: MixtureSpec) -> MseDecomposition:
    """Bias/variance split of the pooled threshold around the optimum 0."""
    stats = threshold_stats_agnostic(n, m, spec)
    bias = stats.mean
    return MseDecomposition(bias, stats.variance, _scalarize(np.square(bias) + stats.variance))


def limit_error_infinite_ood(spec: MixtureSpec) -> float:
    return conditional_target_error(spec, spec.delta)
