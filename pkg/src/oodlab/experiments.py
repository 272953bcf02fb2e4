"""Error curves over the OOD count, shape detection, and searches for the target weight."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .analytic import expected_error_agnostic, expected_error_weighted
from .core_math import Interval, grid_argmin_1d
from .errors import DomainError
from .mixture import MixtureSpec
from .montecarlo import McConfig, mc_expected_error_agnostic, mc_expected_error_weighted

__all__ = [
    "AnalyticAgnostic",
    "AnalyticWeightedFixed",
    "AnalyticWeightedOptimal",
    "McAgnostic",
    "McWeighted",
    "OPTIMAL",
    "ErrorCurve",
    "ShapeKind",
    "CurveShape",
    "sweep_m",
    "detect_shape",
    "optimal_alpha_numeric",
    "adaptive_alpha_schedule",
    "FineGrid",
    "Adaptive",
    "alpha_trajectory",
]

OPTIMAL = "optimal"


@dataclass(frozen=True)
class AnalyticAgnostic:
    tag = "analytic-agnostic"


@dataclass(frozen=True)
class AnalyticWeightedFixed:
    alpha: float
    tag = "analytic-weighted"


@dataclass(frozen=True)
class AnalyticWeightedOptimal:
    coarse_points: int = 101
    refinements: int = 2
    tag = "analytic-weighted-opt"


@dataclass(frozen=True)
class McAgnostic:
    cfg: McConfig
    tag = "mc-agnostic"


@dataclass(frozen=True)
class McWeighted:
    alpha: Union[float, str]
    cfg: McConfig
    tag = "mc-weighted"


Mode = Union[AnalyticAgnostic, AnalyticWeightedFixed, AnalyticWeightedOptimal, McAgnostic, McWeighted]


@dataclass(frozen=True)
class ErrorCurve:
    m_grid: tuple
    values: tuple
    std_errs: Optional[tuple] = None
    alphas: Optional[tuple] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = tuple(int(v) for v in self.m_grid)
        values = tuple(float(v) for v in self.values)
        if len(m) != len(values):
            raise DomainError("m_grid and values differ in length")
        if any(b <= a for a, b in zip(m, m[1:])):
            raise DomainError("m_grid must be strictly ascending")
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise DomainError("curve values must be probabilities")
        object.__setattr__(self, "m_grid", m)
        object.__setattr__(self, "values", values)
        for name in ("std_errs", "alphas"):
            seq = getattr(self, name)
            if seq is not None:
                if len(seq) != len(m):
                    raise DomainError(f"{name} length does not match m_grid")
                object.__setattr__(self, name, tuple(float(v) for v in seq))

    def argmin_m(self) -> int:
        return self.m_grid[int(np.argmin(self.values))]


class ShapeKind(enum.Enum):
    MONOTONE_DECREASING = "MonotoneDecreasing"
    MONOTONE_NONDECREASING = "MonotoneNondecreasing"
    NON_MONOTONIC_DIP = "NonMonotonicDip"
    FLAT = "Flat"
    OTHER = "Other"


@dataclass(frozen=True)
class CurveShape:
    kind: ShapeKind
    dip_index: Optional[int] = None
    dip_m: Optional[int] = None


def _check_grid(m_grid) -> np.ndarray:
    grid = np.asarray(list(m_grid))
    if grid.size == 0:
        raise DomainError("m_grid is empty")
    if grid.dtype.kind not in "iu":
        raise DomainError("m_grid entries must be integers")
    if (grid < 0).any() or (np.diff(grid) <= 0).any():
        raise DomainError("m_grid must be nonnegative and strictly ascending")
    return grid.astype(np.int64)


def optimal_alpha_numeric(
    n: int, m: int, spec: MixtureSpec, coarse_points: int = 101, refinements: int = 2
) -> tuple[float, float]:
    """Target weight minimizing the analytic weighted-FLD error, and that error.

    At ``m = 0`` the objective does not depend on alpha; returns alpha = 1.
    """
    if n < 1:
        raise DomainError("need at least one target sample")
    if m < 0:
        raise DomainError("m must be nonnegative")
    if m == 0:
        return 1.0, float(expected_error_agnostic(n, 0, spec))
    return grid_argmin_1d(
        lambda a: expected_error_weighted(n, m, a, spec),
        Interval(0.0, 1.0),
        coarse_points,
        refinements,
        vectorized=True,
    )


def sweep_m(n: int, m_grid, spec: MixtureSpec, mode: Mode) -> ErrorCurve:
    """Evaluate one error value per OOD count in ``m_grid``."""
    grid = _check_grid(m_grid)
    meta = {"n": n, "mu": spec.mu, "sigma": spec.sigma, "delta": spec.delta, "mode": mode.tag}
    std_errs = alphas = None

    if isinstance(mode, AnalyticAgnostic):
        values = np.atleast_1d(expected_error_agnostic(n, grid, spec))
    elif isinstance(mode, AnalyticWeightedFixed):
        values = [expected_error_weighted(n, int(m), mode.alpha, spec) for m in grid]
        alphas = [mode.alpha] * len(grid)
        meta["alpha_policy"] = mode.alpha
    elif isinstance(mode, AnalyticWeightedOptimal):
        pairs = [optimal_alpha_numeric(n, int(m), spec, mode.coarse_points, mode.refinements) for m in grid]
        alphas = [a for a, _ in pairs]
        values = [v for _, v in pairs]
        meta["alpha_policy"] = OPTIMAL
    elif isinstance(mode, (McAgnostic, McWeighted)):
        ests, alphas = [], []
        for m in grid:
            m = int(m)
            if isinstance(mode, McAgnostic):
                ests.append(mc_expected_error_agnostic(n, m, spec, mode.cfg))
                alphas.append(None)
            else:
                if mode.alpha == OPTIMAL:
                    a = optimal_alpha_numeric(n, m, spec)[0]
                else:
                    a = float(mode.alpha)
                ests.append(mc_expected_error_weighted(n, m, a, spec, mode.cfg))
                alphas.append(a)
        values = [e.mean for e in ests]
        std_errs = [e.std_err for e in ests]
        if isinstance(mode, McAgnostic):
            alphas = None
        else:
            meta["alpha_policy"] = mode.alpha
        meta["replicates"] = mode.cfg.replicates
        meta["master_seed"] = mode.cfg.master_seed
    else:
        raise DomainError(f"unknown sweep mode {mode!r}")

    return ErrorCurve(tuple(grid.tolist()), tuple(values), std_errs, alphas, meta)


def detect_shape(curve, tol: float = 1e-9) -> CurveShape:
    """Classify a curve (an ErrorCurve or a plain sequence of values).

    A dip is a point more than ``tol`` below the first value followed later
    by a point more than ``tol`` above it.
    """
    if isinstance(curve, ErrorCurve):
        values, m_grid = np.asarray(curve.values), curve.m_grid
    else:
        values, m_grid = np.asarray(curve, dtype=float), None
    if len(values) < 3:
        raise DomainError("need at least three points to classify a curve")
    if tol < 0:
        raise DomainError("tol must be nonnegative")

    running_min = np.minimum.accumulate(values)[:-1]
    later = values[1:]
    has_dip = bool(np.any((running_min < values[0] - tol) & (later > running_min + tol)))
    if has_dip:
        i = int(np.argmin(values))
        return CurveShape(ShapeKind.NON_MONOTONIC_DIP, i, m_grid[i] if m_grid is not None else i)

    steps = np.diff(values)
    if values.max() - values.min() <= tol:
        return CurveShape(ShapeKind.FLAT)
    if np.all(steps <= tol) and values[0] - values[-1] > tol:
        return CurveShape(ShapeKind.MONOTONE_DECREASING)
    if np.all(steps >= -tol) and values[-1] - values[0] > tol:
        return CurveShape(ShapeKind.MONOTONE_NONDECREASING)
    return CurveShape(ShapeKind.OTHER)


def adaptive_alpha_schedule(prev_alpha: float) -> list[float]:
    """Ten equally spaced weights from ``prev_alpha`` up to, not including, 1."""
    if not 0.0 <= prev_alpha < 1.0:
        raise DomainError(f"prev_alpha must lie in [0, 1), got {prev_alpha}")
    step = (1.0 - prev_alpha) / 10.0
    return [prev_alpha + k * step for k in range(10)]


@dataclass(frozen=True)
class FineGrid:
    coarse_points: int = 101
    refinements: int = 2


@dataclass(frozen=True)
class Adaptive:
    initial_prev: float = 0.5


def alpha_trajectory(n: int, m_grid, spec: MixtureSpec, search=FineGrid()) -> list[tuple[int, float, float]]:
    """``(m, alpha*, error)`` along an ascending grid of OOD counts.

    ``Adaptive`` carries the previous optimum forward as the lower end of the
    next ten-point search set; the ``m = 0`` convention (alpha = 1) does not
    reset it.
    """
    grid = _check_grid(m_grid)
    out = []
    if isinstance(search, FineGrid):
        for m in grid:
            a, e = optimal_alpha_numeric(n, int(m), spec, search.coarse_points, search.refinements)
            out.append((int(m), a, e))
        return out
    if not isinstance(search, Adaptive):
        raise DomainError(f"unknown search {search!r}")

    prev = search.initial_prev
    for m in grid:
        m = int(m)
        if m == 0:
            a, e = optimal_alpha_numeric(n, 0, spec)
            out.append((0, a, e))
            continue
        candidates = np.array(adaptive_alpha_schedule(prev))
        errs = np.asarray(expected_error_weighted(n, m, candidates, spec))
        k = int(np.argmin(errs))
        prev = float(candidates[k])
        out.append((m, prev, float(errs[k])))
    return out
