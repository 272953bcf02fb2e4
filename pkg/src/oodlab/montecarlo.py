"""Seeded Monte-Carlo estimates of FLD target error and threshold MSE.

Replicate ``r`` draws its data from a generator keyed on
``(master_seed, r)`` through ``numpy.random.SeedSequence``'s hash mixing, so
a replicate's value never depends on which worker ran it or in what order.
Per-replicate values go into an index-addressed buffer and are reduced in
index order, which keeps results bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError
from .fld import fit_agnostic_1d, fit_weighted_1d
from .mixture import MixtureSpec, conditional_target_error, sample_balanced

__all__ = [
    "ConditionalExact",
    "EmpiricalTestSet",
    "McConfig",
    "McEstimate",
    "replicate_rng",
    "worker_count",
    "mc_expected_error_agnostic",
    "mc_expected_error_weighted",
    "mc_threshold_mse",
]

THREADS_ENV = "OODLAB_THREADS"

_TRAIN_STREAM = 0
_TEST_STREAM = 1


@dataclass(frozen=True)
class ConditionalExact:
    """Score each fitted threshold by its exact conditional target risk."""


@dataclass(frozen=True)
class EmpiricalTestSet:
    """Score each fitted threshold on a fresh balanced target test set."""

    test_n: int = 10_000

    def __post_init__(self):
        if self.test_n < 2 or self.test_n % 2:
            raise DomainError("test_n must be even and at least 2")


Estimator = Union[ConditionalExact, EmpiricalTestSet]


@dataclass(frozen=True)
class McConfig:
    replicates: int = 20_000
    master_seed: int = 0
    estimator: Estimator = ConditionalExact()
    threads: int | None = None

    def __post_init__(self):
        if self.replicates < 2:
            raise DomainError("need at least two replicates")
        if self.master_seed < 0:
            raise DomainError("master_seed must be nonnegative")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    replicates: int
    ci95_lo: float
    ci95_hi: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> McEstimate:
        r = len(values)
        mean = float(np.mean(values))
        se = float(np.std(values, ddof=1)) / math.sqrt(r)
        return cls(mean, se, r, mean - 1.96 * se, mean + 1.96 * se)


def replicate_rng(master_seed: int, replicate: int, stream: int = _TRAIN_STREAM) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(replicate, stream))
    return np.random.Generator(np.random.PCG64(ss))


def worker_count(requested: int | None = None) -> int:
    """Thread count: explicit request, else ``OODLAB_THREADS``, else CPU count."""
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            requested = os.cpu_count() or 1
    return max(1, requested)


def _run(replicate_fn: Callable[[int], float], cfg: McConfig) -> np.ndarray:
    out = np.empty(cfg.replicates)
    workers = min(worker_count(cfg.threads), cfg.replicates)

    def block(lo: int, hi: int):
        for r in range(lo, hi):
            out[r] = replicate_fn(r)

    if workers == 1:
        block(0, cfg.replicates)
    else:
        edges = np.linspace(0, cfg.replicates, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for f in [pool.submit(block, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]:
                f.result()
    return out


def _check_counts(n: int, m: int):
    if n < 0 or m < 0 or n % 2 or m % 2:
        raise DomainError("n and m must be even and nonnegative")
    if n + m < 2:
        raise DomainError("n + m must be at least 2")


def _scorer(spec: MixtureSpec, cfg: McConfig):
    if isinstance(cfg.estimator, ConditionalExact):
        return lambda c, r: conditional_target_error(spec, c)
    test_n = cfg.estimator.test_n

    def empirical(c, r):
        test = sample_balanced(spec, test_n, 0, replicate_rng(cfg.master_seed, r, _TEST_STREAM))
        return float(np.mean((test.x > c) != test.y))

    return empirical


def mc_expected_error_agnostic(n: int, m: int, spec: MixtureSpec, cfg: McConfig) -> McEstimate:
    _check_counts(n, m)
    score = _scorer(spec, cfg)

    def one(r):
        data = sample_balanced(spec, n, m, replicate_rng(cfg.master_seed, r))
        return score(fit_agnostic_1d(data).c, r)

    return McEstimate.from_values(_run(one, cfg))


def mc_expected_error_weighted(n: int, m: int, alpha: float, spec: MixtureSpec, cfg: McConfig) -> McEstimate:
    _check_counts(n, m)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    score = _scorer(spec, cfg)

    def one(r):
        data = sample_balanced(spec, n, m, replicate_rng(cfg.master_seed, r))
        return score(fit_weighted_1d(data, alpha).c, r)

    return McEstimate.from_values(_run(one, cfg))


def mc_threshold_mse(n: int, m: int, spec: MixtureSpec, cfg: McConfig) -> McEstimate:
    """Mean squared distance of the pooled threshold from the target optimum 0."""
    _check_counts(n, m)

    def one(r):
        data = sample_balanced(spec, n, m, replicate_rng(cfg.master_seed, r))
        return fit_agnostic_1d(data).c ** 2

    return McEstimate.from_values(_run(one, cfg))
