"""Fisher's linear discriminant: pooled, origin-weighted and d-dimensional fits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EstimationError, SingularCovarianceError
from .mixture import LabeledDataset, Origin

__all__ = [
    "ThresholdHypothesis",
    "LinearDiscriminant",
    "fit_agnostic_1d",
    "fit_weighted_1d",
    "fit_multivariate",
    "predict",
]


@dataclass(frozen=True)
class ThresholdHypothesis:
    """Predict class 1 iff ``x > c``."""

    c: float

    def __post_init__(self):
        if not math.isfinite(self.c):
            raise DomainError(f"threshold must be finite, got {self.c}")

    dim = 1


@dataclass(frozen=True, eq=False)
class LinearDiscriminant:
    """Predict class 1 iff ``omega @ x > c``."""

    omega: np.ndarray
    c: float

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float).reshape(-1)
        if not np.all(np.isfinite(omega)) or not np.any(omega):
            raise DomainError("omega must be finite and not all zero")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def dim(self) -> int:
        return len(self.omega)

    def boundary_1d(self) -> float:
        """Decision point on the real line when ``dim == 1``."""
        if self.dim != 1:
            raise DomainError("boundary_1d needs a one-dimensional discriminant")
        return self.c / self.omega[0]


def _require_1d(data: LabeledDataset):
    if data.x.ndim != 1:
        raise DomainError("expected univariate data")


def fit_agnostic_1d(data: LabeledDataset) -> ThresholdHypothesis:
    """Midpoint of the pooled class means; sample origins are ignored."""
    _require_1d(data)
    means = []
    for k in (0, 1):
        xs = data.x[data.y == k]
        if len(xs) == 0:
            raise EstimationError(f"class {k} is absent from the data")
        means.append(xs.mean())
    return ThresholdHypothesis(0.5 * (means[0] + means[1]))


def fit_weighted_1d(data: LabeledDataset, alpha: float) -> ThresholdHypothesis:
    """Midpoint of class means where target samples weigh ``alpha`` and OOD ``1 - alpha``."""
    _require_1d(data)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    w = np.where(data.origin == Origin.TARGET, alpha, 1.0 - alpha)
    means = []
    for k in (0, 1):
        sel = data.y == k
        denom = w[sel].sum()
        if denom <= 0.0:
            raise EstimationError(f"class {k} has zero effective weight at alpha={alpha}")
        means.append((w[sel] * data.x[sel]).sum() / denom)
    return ThresholdHypothesis(0.5 * (means[0] + means[1]))


def fit_multivariate(data: LabeledDataset, ridge: float = 0.0) -> LinearDiscriminant:
    """Plug-in Gaussian classifier with a shared (pooled MLE) covariance.

    ``omega = S^-1 (m1 - m0)`` and ``c = omega @ (m0 + m1)/2 + log(p0/p1)``,
    where ``S`` is the pooled within-class covariance divided by the total
    count, plus ``ridge * I``.
    """
    if ridge < 0:
        raise DomainError("ridge must be nonnegative")
    x = data.x.reshape(len(data), -1)
    d = x.shape[1]
    means, counts = [], []
    scatter = np.zeros((d, d))
    for k in (0, 1):
        xk = x[data.y == k]
        if len(xk) == 0:
            raise EstimationError(f"class {k} is absent from the data")
        mk = xk.mean(axis=0)
        r = xk - mk
        scatter += r.T @ r
        means.append(mk)
        counts.append(len(xk))
    cov = scatter / len(x) + ridge * np.eye(d)

    diff = means[1] - means[0]
    try:
        if np.linalg.cond(cov) > 1.0 / np.finfo(float).eps:
            raise np.linalg.LinAlgError("ill-conditioned")
        omega = np.linalg.solve(cov, diff)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            f"pooled covariance is singular ({exc}); pass a positive ridge"
        ) from None
    c = float(omega @ (0.5 * (means[0] + means[1]))) + math.log(counts[0] / counts[1])
    return LinearDiscriminant(omega, c)


def predict(h, x):
    """Class label(s) under hypothesis ``h``; the boundary itself maps to 0.

    For a threshold, ``x`` is a scalar or a 1-D array of points. For a
    discriminant, ``x`` is one point of shape ``(dim,)`` or a batch
    ``(N, dim)``.
    """
    if isinstance(h, ThresholdHypothesis):
        arr = np.asarray(x, dtype=float)
        if arr.ndim > 1:
            raise DomainError("threshold hypothesis takes scalar inputs")
        if arr.ndim == 0:
            return int(arr > h.c)
        return (arr > h.c).astype(np.int8)
    if isinstance(h, LinearDiscriminant):
        arr = np.asarray(x, dtype=float)
        if h.dim == 1 and arr.ndim <= 1:
            arr = arr.reshape(-1, 1) if arr.ndim == 1 else arr.reshape(1, 1)
            single = np.ndim(x) == 0
        else:
            single = arr.ndim == 1
            arr = np.atleast_2d(arr)
        if arr.shape[-1] != h.dim:
            raise DomainError(f"input dimension {arr.shape[-1]} does not match {h.dim}")
        out = (arr @ h.omega > h.c).astype(np.int8)
        return int(out[0]) if single else out
    raise TypeError(f"unsupported hypothesis type {type(h).__name__}")
