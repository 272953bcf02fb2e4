"""Shifted two-class Gaussian mixture: sampling, threshold risk, Bayes error.

Target classes are N(-mu, sigma^2) and N(+mu, sigma^2); the OOD task is the
same mixture translated by ``delta``. Class priors are fixed at 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .core_math import std_normal_cdf
from .errors import DomainError

__all__ = [
    "CLASS_PRIOR",
    "Origin",
    "MixtureSpec",
    "LabeledDataset",
    "sample_balanced",
    "conditional_target_error",
    "bayes_error",
]

CLASS_PRIOR = 0.5


class Origin(IntEnum):
    TARGET = 0
    OOD = 1


@dataclass(frozen=True)
class MixtureSpec:
    mu: float
    sigma: float
    delta: float = 0.0

    def __post_init__(self):
        for name in ("mu", "sigma", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.sigma <= 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if self.mu < 0:
            raise DomainError(f"mu must be nonnegative, got {self.mu}")
        if not (math.isfinite(self.mu / self.sigma) and math.isfinite(self.delta / self.sigma)):
            raise DomainError("mu/sigma and delta/sigma must be finite")

    @property
    def mu_std(self) -> float:
        """Half-separation in units of sigma."""
        return self.mu / self.sigma

    @property
    def delta_std(self) -> float:
        """OOD shift in units of sigma."""
        return self.delta / self.sigma

    def with_delta(self, delta: float) -> MixtureSpec:
        return MixtureSpec(self.mu, self.sigma, delta)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Parallel arrays of inputs, class labels and sample origins.

    ``x`` has shape ``(N,)`` for univariate data or ``(N, d)`` otherwise.
    """

    x: np.ndarray
    y: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=np.int8)
        origin = np.asarray(self.origin, dtype=np.int8)
        if x.ndim not in (1, 2):
            raise DomainError("x must be 1-D or 2-D")
        if not (len(x) == len(y) == len(origin)):
            raise DomainError("x, y and origin must have equal length")
        if not np.isin(y, (0, 1)).all():
            raise DomainError("class labels must be 0 or 1")
        if not np.isin(origin, (Origin.TARGET, Origin.OOD)).all():
            raise DomainError("origin must be TARGET or OOD")
        for arr in (x, y, origin):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def from_items(cls, items) -> LabeledDataset:
        """Build from ``(x, y, origin)`` triples."""
        items = list(items)
        if not items:
            return cls(np.empty(0), np.empty(0), np.empty(0))
        xs, ys, origins = zip(*items)
        return cls(np.asarray(xs, dtype=float), np.asarray(ys), np.asarray(origins))

    def __len__(self) -> int:
        return len(self.y)

    @property
    def dim(self) -> int:
        return 1 if self.x.ndim == 1 else self.x.shape[1]

    @property
    def n(self) -> int:
        return int(np.count_nonzero(self.origin == Origin.TARGET))

    @property
    def m(self) -> int:
        return int(np.count_nonzero(self.origin == Origin.OOD))

    def select(self, mask) -> LabeledDataset:
        return LabeledDataset(self.x[mask], self.y[mask], self.origin[mask])

    def target(self) -> LabeledDataset:
        return self.select(self.origin == Origin.TARGET)

    def ood(self) -> LabeledDataset:
        return self.select(self.origin == Origin.OOD)

    def concat(self, other: LabeledDataset) -> LabeledDataset:
        return LabeledDataset(
            np.concatenate([self.x, other.x]),
            np.concatenate([self.y, other.y]),
            np.concatenate([self.origin, other.origin]),
        )


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_balanced(spec: MixtureSpec, n_target: int, m_ood: int, seed) -> LabeledDataset:
    """Draw exactly half of each origin from each class.

    ``seed`` is anything ``numpy.random.default_rng`` accepts, or a Generator
    (which is then advanced). Draw order is target class 0, target class 1,
    OOD class 0, OOD class 1.
    """
    for name, count in (("n_target", n_target), ("m_ood", m_ood)):
        if count < 0 or count % 2:
            raise DomainError(f"{name} must be even and nonnegative, got {count}")
    if n_target + m_ood < 2:
        raise DomainError("need at least two samples in total")

    rng = _rng(seed)
    nh, mh = n_target // 2, m_ood // 2
    mu, s, d = spec.mu, spec.sigma, spec.delta
    x = np.concatenate(
        [
            rng.normal(-mu, s, nh),
            rng.normal(mu, s, nh),
            rng.normal(d - mu, s, mh),
            rng.normal(d + mu, s, mh),
        ]
    )
    y = np.repeat(np.array([0, 1, 0, 1], dtype=np.int8), [nh, nh, mh, mh])
    origin = np.repeat(np.array([0, 0, 1, 1], dtype=np.int8), [nh, nh, mh, mh])
    return LabeledDataset(x, y, origin)


def conditional_target_error(spec: MixtureSpec, c_hat):
    """Target 0-1 risk of the rule "predict 1 iff x > c_hat".

    Accepts a scalar or an array of thresholds.
    """
    a = np.asarray(c_hat, dtype=float) / spec.sigma if np.ndim(c_hat) else c_hat / spec.sigma
    m = spec.mu_std
    return 0.5 * (1.0 + std_normal_cdf(a - m) - std_normal_cdf(a + m))


def bayes_error(spec: MixtureSpec) -> float:
    return std_normal_cdf(-spec.mu_std)
