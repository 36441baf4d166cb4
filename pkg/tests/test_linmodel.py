import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphatune.dataset import Dataset, SyntheticConfig, generate_synthetic
from alphatune.errors import ValidationError
from alphatune.linmodel import (
    LinearModel,
    TrainConfig,
    accuracy,
    canonical_weights,
    dumps_model,
    load_model,
    loads_model,
    loss_gradient,
    predict,
    save_model,
    train_sgd,
    weighted_loss,
)


def _synthetic(n=400, d=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = (X @ np.linspace(1, -1, d) + 0.3 + 0.5 * rng.standard_normal(n) > 0).astype(int)
    return Dataset(X, y)


class TestWeightedLoss:
    def test_zero_model_is_log2(self):
        ds = _synthetic(50)
        assert weighted_loss(LinearModel.zeros(ds.d), ds, np.ones(50)) == pytest.approx(math.log(2), abs=1e-12)

    def test_doubling_weights(self):
        ds = _synthetic(60)
        m = LinearModel(np.arange(5.0) / 5, 0.2)
        w = np.random.default_rng(1).random(60)
        assert weighted_loss(m, ds, 2 * w, 0.1) == pytest.approx(weighted_loss(m, ds, w, 0.1), rel=1e-14)

    def test_single_row_value(self):
        # oracle: -log(1 / (1 + e^-2)) computed independently
        ds = Dataset(np.array([[1.0]]), [1])
        assert weighted_loss(LinearModel([2.0], 0.0), ds, [1.0]) == pytest.approx(0.12692801104297263, abs=1e-12)

    def test_finite_at_extreme_margin(self):
        ds = Dataset(np.array([[1.0]]), [0])
        assert math.isfinite(weighted_loss(LinearModel([1e6], 0.0), ds, [1.0]))

    def test_l2_term(self):
        ds = _synthetic(10, d=2)
        m = LinearModel([3.0, 4.0], 0.0)
        diff = weighted_loss(m, ds, np.ones(10), 0.5) - weighted_loss(m, ds, np.ones(10), 0.0)
        assert diff == pytest.approx(12.5)

    @pytest.mark.parametrize("w", [np.ones(3), np.zeros(4), -np.ones(4), [1, 1, np.nan, 1]])
    def test_invalid_weights(self, w):
        ds = _synthetic(4, d=2)
        with pytest.raises(ValidationError):
            weighted_loss(LinearModel.zeros(2), ds, w)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(100):
        n, d = rng.integers(5, 40), rng.integers(1, 8)
        ds = Dataset(rng.standard_normal((n, d)), rng.integers(0, 2, n))
        w = rng.random(n) + 0.01
        l2 = float(rng.random() * 0.1)
        model = LinearModel(rng.standard_normal(d), float(rng.standard_normal()))
        g_coef, g_b = loss_gradient(model, ds, w, l2)
        analytic = np.append(g_coef, g_b)
        theta = np.append(model.coefficients, model.intercept)
        numeric = np.empty_like(theta)
        h = 1e-6
        for j in range(theta.size):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += h
            tm[j] -= h
            fp = weighted_loss(LinearModel(tp[:-1], tp[-1]), ds, w, l2)
            fm = weighted_loss(LinearModel(tm[:-1], tm[-1]), ds, w, l2)
            numeric[j] = (fp - fm) / (2 * h)
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-8)
        worst = max(worst, rel)
    assert worst < 1e-5


class TestTrain:
    def test_separable_1d(self):
        x = np.concatenate([-np.linspace(0.1, 2, 50), np.linspace(0.1, 2, 50)])
        ds = Dataset(x[:, None], (x > 0).astype(int))
        model, _ = train_sgd(ds, np.ones(100))
        assert accuracy(model, ds) == 1.0

    def test_deterministic(self):
        ds = _synthetic()
        a, sa = train_sgd(ds, np.ones(ds.n), TrainConfig(seed=3))
        b, sb = train_sgd(ds, np.ones(ds.n), TrainConfig(seed=3))
        assert a == b and sa == sb

    def test_weight_scaling_bit_identical(self):
        ds = _synthetic()
        w = np.random.default_rng(2).random(ds.n) + 0.1
        a, _ = train_sgd(ds, w)
        for scale in (2.0, 0.37, 1e5):
            b, _ = train_sgd(ds, w * scale)
            assert np.array_equal(a.coefficients, b.coefficients)
            assert a.intercept == b.intercept

    def test_warm_start_from_converged_model(self):
        ds = _synthetic(2000)
        cold, s_cold = train_sgd(ds, np.ones(ds.n))
        _, s_warm = train_sgd(ds, np.ones(ds.n), init=cold)
        assert s_warm.epochs_run < s_cold.epochs_run

    def test_zero_weight_rows_ignored(self):
        target = _synthetic(300, seed=1)
        other = _synthetic(700, seed=2)
        both = Dataset(np.vstack([target.features, other.features]),
                       np.concatenate([target.labels, other.labels]))
        w = np.concatenate([np.ones(300), np.zeros(700)])
        a, _ = train_sgd(both, w)
        b, _ = train_sgd(target, np.ones(300))
        held = _synthetic(2000, seed=9).features
        assert np.mean(predict(a, held) == predict(b, held)) >= 0.99

    def test_epochs_bounded(self):
        ds = _synthetic(100)
        _, stats = train_sgd(ds, np.ones(100), TrainConfig(max_epochs=3, tolerance=0.0))
        assert stats.epochs_run == 3 and not stats.converged

    def test_init_dimension_mismatch(self):
        ds = _synthetic(20, d=3)
        with pytest.raises(ValidationError):
            train_sgd(ds, np.ones(20), init=LinearModel.zeros(4))

    @pytest.mark.parametrize("bad", [dict(max_epochs=0), dict(batch_size=0), dict(l2_penalty=-1.0),
                                     dict(learning_rate="adam"), dict(tolerance=-1.0)])
    def test_invalid_config(self, bad):
        ds = _synthetic(20)
        with pytest.raises(ValidationError):
            train_sgd(ds, np.ones(20), TrainConfig(**bad))

    def test_constant_schedule_runs(self):
        ds = _synthetic(200)
        model, _ = train_sgd(ds, np.ones(200), TrainConfig(learning_rate="constant", eta0=0.01))
        assert accuracy(model, ds) > 0.7


def test_canonical_weights_scale_free():
    w = np.array([0.1, 3.0, 7.5, 1e-3])
    assert np.array_equal(canonical_weights(w), canonical_weights(w * 13.0))


class TestPredict:
    def test_zero_model_predicts_zero(self):
        assert predict(LinearModel.zeros(2), np.ones((3, 2))).tolist() == [0, 0, 0]

    def test_sign(self):
        assert predict(LinearModel([1.0], -0.5), [[0.6]]).tolist() == [1]

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-5, 5))
    def test_negation_flips_strict(self, coef, b):
        X = np.random.default_rng(0).standard_normal((20, 3))
        m, neg = LinearModel(coef, b), LinearModel(-np.asarray(coef), -b)
        strict = m.decision_function(X) != 0
        assert np.all(predict(m, X)[strict] != predict(neg, X)[strict])

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            predict(LinearModel.zeros(2), np.ones((3, 3)))

    def test_accuracy_empty(self):
        with pytest.raises(ValidationError):
            accuracy(LinearModel.zeros(2), Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int)))

    def test_zero_model_balanced(self):
        t, _ = generate_synthetic(SyntheticConfig(4000, 1, d=10, seed=0))
        assert abs(accuracy(LinearModel.zeros(10), t) - 0.5) < 0.03


class TestSerialization:
    def test_roundtrip_exact(self, tmp_path):
        m = LinearModel(np.random.default_rng(0).standard_normal(7), -0.123456789012345)
        save_model(m, tmp_path / "m.txt", TrainConfig())
        back, meta = load_model(tmp_path / "m.txt")
        assert back == m
        assert meta["config.l2_penalty"] == str(TrainConfig().l2_penalty)

    def test_dumps_is_text(self):
        text = dumps_model(LinearModel([1.0, 2.0], 0.5))
        assert loads_model(text)[0] == LinearModel([1.0, 2.0], 0.5)

    def test_corrupt(self):
        with pytest.raises(ValidationError):
            loads_model("format = something-else\n")
