"""Fixed-fraction mini-batches and an origin-weighted logistic-regression SGD loop.

A one-dimensional logistic model ``p(y=1|x) = sigmoid(w x + b)`` induces the
threshold ``-b / w``, so its target error can be scored exactly with the
mixture's conditional risk and compared directly against FLD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, DomainError, GradientError
from .mixture import LabeledDataset, MixtureSpec, conditional_target_error

__all__ = [
    "AGNOSTIC",
    "Batch",
    "SgdConfig",
    "LinearModel",
    "beta_batches",
    "logistic_loss",
    "weighted_minibatch_gradient",
    "model_target_error",
    "train_logistic",
]

AGNOSTIC = "agnostic"


@dataclass(frozen=True)
class Batch:
    target_indices: tuple
    ood_indices: tuple

    @property
    def size(self) -> int:
        return len(self.target_indices) + len(self.ood_indices)


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.01
    epochs: int = 50
    batch_size: int = 20
    beta: float = 0.5
    alpha: Union[float, str] = AGNOSTIC
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.epochs < 0:
            raise ConfigurationError("epochs must be nonnegative")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be at least 1")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError("beta must lie in [0, 1]")
        if self.alpha != AGNOSTIC and not (
            isinstance(self.alpha, (int, float)) and 0.0 <= self.alpha <= 1.0
        ):
            raise ConfigurationError(f"alpha must be in [0, 1] or {AGNOSTIC!r}, got {self.alpha!r}")

    @property
    def target_per_batch(self) -> int:
        # round() is half-to-even; fixed once so every batch has the same split
        return round(self.beta * self.batch_size)

    @property
    def agnostic(self) -> bool:
        return self.alpha == AGNOSTIC


@dataclass(frozen=True)
class LinearModel:
    w: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.w) and math.isfinite(self.b)):
            raise DomainError("model parameters must be finite")


class _Pool:
    """Endless stream of indices 0..size-1: successive seeded permutations."""

    def __init__(self, size: int, rng: np.random.Generator):
        self.size = size
        self.rng = rng
        self.order = rng.permutation(size)
        self.pos = 0

    def take(self, k: int) -> list[int]:
        out: list[int] = []
        while len(out) < k:
            if self.pos == self.size:
                self.order = self.rng.permutation(self.size)
                self.pos = 0
            step = min(k - len(out), self.size - self.pos)
            out.extend(self.order[self.pos : self.pos + step].tolist())
            self.pos += step
        return out


def beta_batches(n: int, m: int, cfg: SgdConfig) -> Iterator[Batch]:
    """Infinite stream of batches with exactly ``round(beta * B)`` target indices.

    Target and OOD pools are consumed independently, each as a sequence of
    fresh permutations, so within every ``ceil(n / k)``-batch window starting
    at the stream head each target index appears at least once.
    """
    k_t = cfg.target_per_batch
    k_o = cfg.batch_size - k_t
    if k_t > 0 and k_t > n:
        raise ConfigurationError(f"target pool has {n} samples but each batch needs {k_t}")
    if k_o > 0 and k_o > m:
        raise ConfigurationError(f"OOD pool has {m} samples but each batch needs {k_o}")

    ss = np.random.SeedSequence(cfg.seed)
    t_seed, o_seed = ss.spawn(2)
    target = _Pool(n, np.random.default_rng(t_seed)) if k_t else None
    ood = _Pool(m, np.random.default_rng(o_seed)) if k_o else None
    while True:
        yield Batch(
            tuple(target.take(k_t)) if target else (),
            tuple(ood.take(k_o)) if ood else (),
        )


def logistic_loss(model: LinearModel, x, y) -> float:
    """Mean negative log-likelihood of labels ``y`` under the model."""
    z = model.w * np.asarray(x, dtype=float) + model.b
    return float(np.mean(np.logaddexp(0.0, z) - np.asarray(y) * z))


def _mean_grad(model: LinearModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    resid = expit(model.w * x + model.b) - y
    return np.array([np.mean(resid * x), np.mean(resid)])


def weighted_minibatch_gradient(model: LinearModel, target, ood, alpha: float) -> tuple[float, float]:
    """Gradient of ``alpha * L_target + (1 - alpha) * L_ood`` w.r.t. ``(w, b)``.

    ``target`` and ``ood`` are ``(x, y)`` pairs; a side with zero weight may be
    empty.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    grad = np.zeros(2)
    for weight, (x, y), name in ((alpha, target, "target"), (1.0 - alpha, ood, "OOD")):
        x = np.asarray(x, dtype=float)
        if weight == 0.0:
            continue
        if x.size == 0:
            raise GradientError(f"{name} side of the batch is empty but has weight {weight}")
        grad += weight * _mean_grad(model, x, np.asarray(y, dtype=float))
    return float(grad[0]), float(grad[1])


def model_target_error(model: LinearModel, spec: MixtureSpec) -> float:
    """Exact target error of the model's decision rule ``w x + b > 0``."""
    if model.w == 0.0 or not math.isfinite(-model.b / model.w):
        return 0.5
    c = -model.b / model.w
    err = conditional_target_error(spec, c)
    # w < 0 flips the rule to "predict 1 iff x < c"
    return err if model.w > 0 else 1.0 - err


def _sgd_step(model: LinearModel, grad: tuple[float, float], lr: float) -> LinearModel:
    w, b = model.w - lr * grad[0], model.b - lr * grad[1]
    if not (math.isfinite(w) and math.isfinite(b)):
        raise FloatingPointError(f"SGD diverged (w={w}, b={b}); lower the learning rate")
    return LinearModel(w, b)


def train_logistic(
    target: LabeledDataset, ood: LabeledDataset, cfg: SgdConfig, spec: MixtureSpec
) -> tuple[LinearModel, list[float]]:
    """SGD from ``w = b = 0``; returns the final model and its per-epoch target error.

    Agnostic mode shuffles the pooled data once per epoch and walks it in
    batches of ``B`` (last batch may be short). Weighted mode draws
    ``ceil((n + m) / B)`` fixed-fraction batches per epoch; if one origin
    carries no weight (``alpha`` of 0 or 1) or has no samples, batches are
    drawn from the other origin only.
    """
    if target.x.ndim != 1 or ood.x.ndim != 1:
        raise DomainError("train_logistic takes univariate data")
    xt, yt = target.x, target.y.astype(float)
    xo, yo = ood.x, ood.y.astype(float)
    n, m = len(xt), len(xo)
    if n + m == 0:
        raise DomainError("no training data")

    model = LinearModel()
    trace: list[float] = []
    per_epoch = math.ceil((n + m) / cfg.batch_size)

    if cfg.agnostic:
        x = np.concatenate([xt, xo])
        y = np.concatenate([yt, yo])
        rng = np.random.default_rng(cfg.seed)
        for _ in range(cfg.epochs):
            order = rng.permutation(n + m)
            for lo in range(0, n + m, cfg.batch_size):
                idx = order[lo : lo + cfg.batch_size]
                model = _sgd_step(model, weighted_minibatch_gradient(model, (x[idx], y[idx]), ((), ()), 1.0), cfg.learning_rate)
            trace.append(model_target_error(model, spec))
        return model, trace

    alpha = float(cfg.alpha)
    beta = cfg.beta
    if alpha == 1.0 or m == 0:
        beta = 1.0
    elif alpha == 0.0 or n == 0:
        beta = 0.0
    batch_cfg = SgdConfig(cfg.learning_rate, cfg.epochs, cfg.batch_size, beta, alpha, cfg.seed)
    if beta == 1.0:
        alpha = 1.0
    elif beta == 0.0:
        alpha = 0.0
    stream = beta_batches(n, m, batch_cfg)
    for _ in range(cfg.epochs):
        for _ in range(per_epoch):
            b = next(stream)
            ti, oi = list(b.target_indices), list(b.ood_indices)
            g = weighted_minibatch_gradient(model, (xt[ti], yt[ti]), (xo[oi], yo[oi]), alpha)
            model = _sgd_step(model, g, cfg.learning_rate)
        trace.append(model_target_error(model, spec))
    return model, trace
