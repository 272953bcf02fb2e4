"""Standard-normal functions and deterministic grid optimizers.

``std_normal_cdf`` goes through ``erfc`` so that both tails keep full
relative precision; ``0.5 * (1 + erf(x / sqrt 2))`` loses everything below
~1e-16 in the lower tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError, EvaluationError

__all__ = [
    "Interval",
    "std_normal_cdf",
    "std_normal_pdf",
    "grid_argmin_1d",
    "grid_sup_2d",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise DomainError(f"interval lo={self.lo} exceeds hi={self.hi}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def lattice(self, points: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, points)


def _check_finite(x):
    if np.ndim(x) == 0:
        if not math.isfinite(x):
            raise DomainError(f"expected a finite value, got {x!r}")
    elif not np.all(np.isfinite(x)):
        raise DomainError("expected finite values, got non-finite entries")


def std_normal_cdf(x):
    """Standard normal CDF for a scalar or an array.

    Scalars return a Python float, arrays an ndarray of the same shape.
    """
    _check_finite(x)
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def std_normal_pdf(x):
    _check_finite(x)
    if np.ndim(x) == 0:
        x = float(x)
        return _INV_SQRT_2PI * math.exp(-0.5 * x * x)
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def _evaluate(objective, xs: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        values = np.asarray(objective(xs), dtype=float)
        if values.shape != xs.shape:
            values = np.broadcast_to(values, xs.shape).astype(float)
    else:
        values = np.fromiter((objective(float(x)) for x in xs), dtype=float, count=len(xs))
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.argmax(bad))
        raise EvaluationError(
            f"objective returned {values[i]} at x={xs[i]!r}", point=float(xs[i])
        )
    return values


def grid_argmin_1d(
    objective: Callable,
    domain: Interval,
    coarse_points: int = 101,
    refinements: int = 2,
    *,
    vectorized: bool = False,
) -> tuple[float, float]:
    """Minimize ``objective`` over ``domain`` by lattice search with bracketing.

    The coarse lattice has ``coarse_points`` endpoint-inclusive points. Each
    refinement re-grids the bracket ``[x* - h, x* + h]`` (clipped to the
    domain) at spacing ``h / (coarse_points - 1)``, so the final spacing is
    ``width / (coarse_points - 1) ** (refinements + 1)``. Ties go to the
    smaller argument. With ``vectorized=True`` the objective receives the
    whole lattice as an array.

    Returns ``(argmin, min_value)``.
    """
    if coarse_points < 3:
        raise DomainError("coarse_points must be at least 3")
    if refinements < 0:
        raise DomainError("refinements must be nonnegative")

    xs = domain.lattice(coarse_points)
    values = _evaluate(objective, xs, vectorized)
    i = int(np.argmin(values))
    best_x, best_v = float(xs[i]), float(values[i])
    h = domain.width / (coarse_points - 1)

    for _ in range(refinements):
        if h == 0.0:
            break
        k = coarse_points - 1
        xs = best_x + h * np.arange(-k, k + 1) / k
        xs = xs[(xs >= domain.lo) & (xs <= domain.hi)]
        values = _evaluate(objective, xs, vectorized)
        i = int(np.argmin(values))
        # strict improvement only, so an equal value at a larger x never wins
        if values[i] < best_v or (values[i] == best_v and xs[i] < best_x):
            best_x, best_v = float(xs[i]), float(values[i])
        h /= k

    return best_x, best_v


def grid_sup_2d(
    objective: Callable,
    domain: tuple[Interval, Interval],
    points_per_axis: int = 257,
    *,
    vectorized: bool = False,
) -> float:
    """Maximum of ``objective(x, y)`` over an endpoint-inclusive square lattice."""
    if points_per_axis < 2:
        raise DomainError("points_per_axis must be at least 2")
    dx, dy = domain
    gx = dx.lattice(points_per_axis)
    gy = dy.lattice(points_per_axis)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    if vectorized:
        values = np.broadcast_to(np.asarray(objective(X, Y), dtype=float), X.shape)
    else:
        values = np.array([[objective(float(x), float(y)) for y in gy] for x in gx], dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise EvaluationError(
            f"objective returned {values[i, j]} at ({gx[i]!r}, {gy[j]!r})",
            point=(float(gx[i]), float(gy[j])),
        )
    return float(values.max())
