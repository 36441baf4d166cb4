import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from alphatune.dataset import Dataset, SyntheticConfig, generate_synthetic, split_train_test
from alphatune.errors import ValidationError
from alphatune.linmodel import TrainConfig, predict
from alphatune.methods import (
    METHODS,
    baseline_alpha,
    clamp_probability,
    domain_balance_weights,
    domain_classifier,
    feataug_transform,
    fit_baseline,
    fit_crosstrainer,
    fit_feataug,
    fit_import,
    fit_pred,
    import_weight,
)


class TestImportWeight:
    def test_two_thirds(self):
        assert import_weight(2 / 3, 1.0) == pytest.approx(2.0, abs=1e-12)

    @pytest.mark.parametrize("c", [0.1, 1.0, 7.0, 400.0])
    def test_half_gives_c(self, c):
        assert import_weight(0.5, c) == c

    def test_clamped(self):
        assert import_weight(1.0, 1.0) == pytest.approx(999.0)
        assert import_weight(0.0, 1.0) == pytest.approx(1 / 999)

    @settings(max_examples=100, deadline=None)
    @given(arrays(np.float64, 20, elements=st.floats(0, 1)), st.floats(0.01, 100))
    def test_positive_finite(self, p, c):
        w = import_weight(p, c)
        assert np.all(np.isfinite(w)) and np.all(w > 0)
        q = clamp_probability(p)
        assert np.all((q >= 0.001) & (q <= 0.999))


class TestFeatAug:
    def test_layouts_bit_exact(self):
        X = np.array([[1.5, -2.0], [0.1, 3.0]])
        s = feataug_transform(X, "source")
        t = feataug_transform(X, "target")
        assert np.array_equal(s, [[1.5, -2.0, 1.5, -2.0, 0, 0], [0.1, 3.0, 0.1, 3.0, 0, 0]])
        assert np.array_equal(t, [[1.5, -2.0, 0, 0, 1.5, -2.0], [0.1, 3.0, 0, 0, 0.1, 3.0]])

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (4, 3), elements=st.floats(-1e6, 1e6)))
    def test_width_and_injective(self, X):
        for dom in ("source", "target"):
            out = feataug_transform(X, dom)
            assert out.shape == (4, 9)
            assert np.array_equal(out[:, :3], X)
        assert not np.any(np.all(feataug_transform(X, "source")[:, 3:6] == 0, axis=1)
                          & np.any(X != 0, axis=1))

    def test_bad_domain(self):
        with pytest.raises(ValidationError):
            feataug_transform(np.ones((2, 2)), "other")

    def test_empty_source_is_target_only_augmented(self):
        t, _ = generate_synthetic(SyntheticConfig(300, 1, d=4, seed=1))
        empty = Dataset(np.zeros((0, 4)), np.zeros(0, dtype=int))
        res = fit_feataug(t, empty, TrainConfig(), t)
        assert res.model.d == 12
        np.testing.assert_array_equal(res.model.coefficients[4:8], 0.0)


def test_baseline_alphas():
    assert baseline_alpha("target", 10, 90) == 1.0
    assert baseline_alpha("source", 10, 90) == 0.0
    assert baseline_alpha("all", 10, 90) == pytest.approx(0.1)
    with pytest.raises(ValidationError):
        baseline_alpha("mixed", 10, 90)


def test_domain_balance():
    wt, ws = domain_balance_weights(100, 900)
    assert wt * 100 == pytest.approx(500) and ws * 900 == pytest.approx(500)


@pytest.fixture(scope="module")
def shifted():
    t, s = generate_synthetic(SyntheticConfig(1500, 2000, d=8, sigma=1.0, seed=5))
    train, test = split_train_test(t, 0.2, seed=0)
    return train.subset(np.arange(300)), s, test


class TestMethodFits:
    def test_pred_indistinguishable_domains(self):
        # both domains drawn from the same distribution: balanced classifier is near 0.5
        rng = np.random.default_rng(0)
        X = rng.standard_normal((3000, 5))
        y = (X.sum(1) > 0).astype(int)
        t, s = Dataset(X[:500], y[:500]), Dataset(X[500:], y[500:])
        clf = domain_classifier(t, s, TrainConfig(), balanced=True)
        p = clf.predict_proba(X)
        assert abs(p.mean() - 0.5) < 0.05
        res = fit_pred(t, s, TrainConfig(), t)
        assert abs(res.info["mean_weight"] - 0.5) < 0.05

    def test_import_indistinguishable_weights_near_one(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((3000, 5))
        y = (X.sum(1) > 0).astype(int)
        t, s = Dataset(X[:500], y[:500]), Dataset(X[500:], y[500:])
        res = fit_import(t, s, TrainConfig(), t)
        assert abs(res.info["mean_source_weight"] - 1.0) < 0.15

    @pytest.mark.parametrize("name", sorted(METHODS))
    def test_methods_run(self, shifted, name):
        target, source, test = shifted
        res = METHODS[name](target, source, TrainConfig(), test)
        assert res.method_name == name
        assert 0.5 < res.test_accuracy <= 1.0
        assert np.array_equal(res.predict(test.features) == test.labels,
                              res.predict(test.features) == test.labels)
        assert np.mean(res.predict(test.features) == test.labels) == pytest.approx(res.test_accuracy)

    def test_baselines_match_alpha_training(self, shifted):
        target, source, test = shifted
        from alphatune.reweight import AlphaProblem, train_at_alpha
        for kind in ("target", "source", "all"):
            res = fit_baseline(kind, target, source, TrainConfig(), test)
            model, _ = train_at_alpha(AlphaProblem(target, source, res.info["alpha"]), TrainConfig())
            assert np.array_equal(predict(res.model, test.features), predict(model, test.features))

    def test_crosstrainer_result(self, shifted):
        target, source, test = shifted
        res, rep = fit_crosstrainer(target, source, TrainConfig(), test, k=5, delta=0.01)
        assert res.info["alpha"] == rep.alpha_star
        assert rep.n_evaluations <= 25
        assert np.mean(res.predict(test.features) == test.labels) == res.test_accuracy
