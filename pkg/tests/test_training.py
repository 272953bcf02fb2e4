import itertools
import math

import numpy as np
import pytest

from oodlab.errors import ConfigurationError, DomainError, GradientError
from oodlab.experiments import optimal_alpha_numeric
from oodlab.mixture import MixtureSpec, bayes_error, sample_balanced
from oodlab.training import (
    LinearModel,
    SgdConfig,
    beta_batches,
    logistic_loss,
    model_target_error,
    train_logistic,
    weighted_minibatch_gradient,
)

SPEC = MixtureSpec(5.0, 10.0, 1.6)


class TestBetaBatches:
    @pytest.mark.parametrize("beta,k", [(0.5, 10), (0.75, 15), (1.0, 20), (0.0, 0), (0.025, 0), (0.075, 2)])
    def test_composition(self, beta, k):
        cfg = SgdConfig(batch_size=20, beta=beta)
        for b in itertools.islice(beta_batches(100, 300, cfg), 2000):
            assert len(b.target_indices) == k and len(b.ood_indices) == 20 - k

    def test_indices_in_range(self):
        for b in itertools.islice(beta_batches(37, 11, SgdConfig(batch_size=8, beta=0.5)), 500):
            assert all(0 <= i < 37 for i in b.target_indices)
            assert all(0 <= i < 11 for i in b.ood_indices)

    @pytest.mark.parametrize("n,k", [(100, 10), (37, 4), (15, 15), (7, 3)])
    def test_coverage_window(self, n, k):
        cfg = SgdConfig(batch_size=2 * k, beta=0.5, seed=n)
        window = math.ceil(n / k)
        head = itertools.islice(beta_batches(n, 1000, cfg), window)
        counts = np.bincount([i for b in head for i in b.target_indices], minlength=n)
        assert counts.min() >= 1 and counts.max() <= 2

    def test_deterministic(self):
        cfg = SgdConfig(batch_size=10, beta=0.3, seed=5)
        a = list(itertools.islice(beta_batches(50, 50, cfg), 100))
        b = list(itertools.islice(beta_batches(50, 50, cfg), 100))
        assert a == b

    def test_infeasible_pool_named(self):
        with pytest.raises(ConfigurationError, match="target"):
            next(beta_batches(5, 100, SgdConfig(batch_size=20, beta=0.5)))
        with pytest.raises(ConfigurationError, match="OOD"):
            next(beta_batches(100, 5, SgdConfig(batch_size=20, beta=0.5)))

    def test_config_validation(self):
        for kwargs in ({"learning_rate": 0}, {"batch_size": 0}, {"beta": 1.5}, {"alpha": 2.0}, {"alpha": "x"}):
            with pytest.raises(ConfigurationError):
                SgdConfig(**kwargs)


def numeric_grad(model, target, ood, alpha, h=1e-6):
    def loss(w, b):
        m = LinearModel(w, b)
        total = 0.0
        if alpha > 0:
            total += alpha * logistic_loss(m, *target)
        if alpha < 1:
            total += (1 - alpha) * logistic_loss(m, *ood)
        return total

    dw = (loss(model.w + h, model.b) - loss(model.w - h, model.b)) / (2 * h)
    db = (loss(model.w, model.b + h) - loss(model.w, model.b - h)) / (2 * h)
    return dw, db


def random_draw(rng):
    model = LinearModel(rng.normal(0, 0.3), rng.normal(0, 1))
    kt, ko = int(rng.integers(1, 15)), int(rng.integers(1, 15))
    target = (rng.normal(0, 3, kt), rng.integers(0, 2, kt))
    ood = (rng.normal(1, 3, ko), rng.integers(0, 2, ko))
    return model, target, ood, float(rng.uniform(0, 1))


class TestGradient:
    def test_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            model, target, ood, alpha = random_draw(rng)
            got = np.array(weighted_minibatch_gradient(model, target, ood, alpha))
            want = np.array(numeric_grad(model, target, ood, alpha))
            assert np.linalg.norm(got - want) <= 1e-5 * max(np.linalg.norm(want), 1e-3)

    def test_linear_in_alpha(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            model, target, ood, alpha = random_draw(rng)
            g = np.array(weighted_minibatch_gradient(model, target, ood, alpha))
            g1 = np.array(weighted_minibatch_gradient(model, target, ood, 1.0))
            g0 = np.array(weighted_minibatch_gradient(model, target, ood, 0.0))
            np.testing.assert_allclose(g, alpha * g1 + (1 - alpha) * g0, rtol=0, atol=1e-12)

    def test_alpha_one_is_plain_target_gradient(self):
        rng = np.random.default_rng(2)
        model, target, _, _ = random_draw(rng)
        got = weighted_minibatch_gradient(model, target, ((), ()), 1.0)
        np.testing.assert_allclose(got, numeric_grad(model, target, target, 1.0), rtol=1e-6)

    def test_identical_sides_ignore_alpha(self):
        rng = np.random.default_rng(3)
        model, target, _, _ = random_draw(rng)
        g = [weighted_minibatch_gradient(model, target, target, a) for a in (0.0, 0.3, 1.0)]
        np.testing.assert_allclose(g[0], g[1], atol=1e-15)
        np.testing.assert_allclose(g[0], g[2], atol=1e-15)

    def test_empty_weighted_side(self):
        with pytest.raises(GradientError):
            weighted_minibatch_gradient(LinearModel(), ([1.0], [1]), ((), ()), 0.5)


class TestModelError:
    def test_zero_slope(self):
        assert model_target_error(LinearModel(0.0, 3.0), SPEC) == 0.5

    def test_orientation(self):
        assert model_target_error(LinearModel(1.0, 0.0), SPEC) == pytest.approx(bayes_error(SPEC))
        assert model_target_error(LinearModel(-1.0, 0.0), SPEC) == pytest.approx(1 - bayes_error(SPEC))

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            LinearModel(math.nan, 0.0)


def run(n, m, alpha, seed, beta=0.5, epochs=50):
    data = sample_balanced(SPEC, n, m, seed=np.random.SeedSequence(seed, spawn_key=(m,)))
    cfg = SgdConfig(epochs=epochs, alpha=alpha, beta=beta, seed=seed)
    return train_logistic(data.target(), data.ood(), cfg, SPEC)


class TestTraining:
    def test_deterministic(self):
        a, ta = run(40, 60, "agnostic", 3, epochs=5)
        b, tb = run(40, 60, "agnostic", 3, epochs=5)
        assert a == b and ta == tb
        c, _ = run(40, 60, 0.7, 3, epochs=5)
        d, _ = run(40, 60, 0.7, 3, epochs=5)
        assert c == d

    def test_trace_length_and_range(self):
        _, trace = run(40, 60, 0.6, 1, epochs=7)
        assert len(trace) == 7 and all(0 <= e <= 1 for e in trace)

    def test_pure_target_reaches_bayes(self):
        data = sample_balanced(SPEC, 2000, 0, seed=11)
        _, trace = train_logistic(data.target(), data.ood(), SgdConfig(epochs=50), SPEC)
        assert abs(trace[-1] - bayes_error(SPEC)) <= 0.02

    def test_weighted_extremes_use_one_pool(self):
        # alpha = 1 with too few OOD samples for beta = 0.5 still trains
        _, trace = run(40, 2, 1.0, 0, epochs=3)
        assert len(trace) == 3
        _, trace = run(40, 0, 0.3, 0, epochs=3)
        assert len(trace) == 3

    def test_weighted_mode_handles_many_ood(self):
        means = {}
        for m in (0, 2000):
            alpha = optimal_alpha_numeric(100, m, SPEC)[0]
            means[m] = np.mean([run(100, m, alpha, s)[1][-1] for s in range(10)])
        assert means[2000] <= means[0] + 0.01

    def test_rejects_multivariate(self):
        from oodlab.mixture import LabeledDataset

        d = LabeledDataset(np.zeros((2, 2)), [0, 1], [0, 0])
        with pytest.raises(DomainError):
            train_logistic(d, d, SgdConfig(), SPEC)
