"""Baselines and competing domain-adaptation methods.

All fitters return a :class:`MethodResult` scored on a caller-supplied
evaluation set (the held-out target test split in benchmarks).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, check_same_dim, concat
from .errors import ValidationError
from .linmodel import LinearModel, TrainConfig, accuracy, predict, train_sgd
from .reweight import AlphaProblem, beta_of, train_at_alpha
from .search import AlphaEvaluator, run_strategy

BASELINES = {"target", "source", "all"}
PROB_FLOOR, PROB_CEIL = 0.001, 0.999


@dataclass
class MethodResult:
    method_name: str
    model: LinearModel
    test_accuracy: float
    fit_seconds: float
    augmented: bool = False
    info: dict = field(default_factory=dict)

    def predict(self, features) -> np.ndarray:
        X = feataug_transform(features, "target") if self.augmented else features
        return predict(self.model, X)


def _result(name, model, evaluate_on, start, augmented=False, **info):
    seconds = time.perf_counter() - start
    test = evaluate_on
    if augmented:
        test = test.with_features(feataug_transform(test.features, "target"))
    return MethodResult(name, model, accuracy(model, test), seconds, augmented, info)


def baseline_alpha(kind: str, n_target: int, n_source: int) -> float:
    if kind == "target":
        return 1.0
    if kind == "source":
        return 0.0
    if kind == "all":
        return beta_of(n_target, n_source)
    raise ValidationError(f"unknown baseline {kind!r}; choose from {sorted(BASELINES)}")


def fit_baseline(kind: str, target: Dataset, source: Dataset, cfg: TrainConfig,
                 evaluate_on: Dataset) -> MethodResult:
    """Target (alpha=1), Source (alpha=0) or All (alpha=beta) model."""
    start = time.perf_counter()
    alpha = baseline_alpha(kind, target.n, source.n)
    model, _ = train_at_alpha(AlphaProblem(target, source, alpha), cfg)
    return _result(kind, model, evaluate_on, start, alpha=alpha)


def fit_crosstrainer(target: Dataset, source: Dataset, cfg: TrainConfig, evaluate_on: Dataset,
                     k: int = 5, delta: float = 0.01, seed: int = 0, strategy: str = "gss",
                     warm_start: bool = True, n_probes: int = 100, name: str = "crosstrainer"):
    """Loss reweighting with alpha chosen by cross-validated search.

    Returns ``(MethodResult, SearchReport)``.
    """
    start = time.perf_counter()
    evaluator = AlphaEvaluator(target, source, k, cfg, seed, warm_start)
    alpha_star, report = run_strategy(strategy, evaluator, delta, n_probes, seed)
    result = _result(name, report.final_model, evaluate_on, start, alpha=alpha_star,
                     strategy=strategy, warm_start=warm_start)
    return result, report


# --------------------------------------------------------------------------
# domain-classifier reweighting


def domain_balance_weights(n_target: int, n_source: int) -> tuple[float, float]:
    """Per-row weights giving both domains equal total weight ``m / 2``."""
    if n_target < 1 or n_source < 1:
        raise ValidationError("domain classifier needs rows from both domains")
    m = n_target + n_source
    return m / (2.0 * n_target), m / (2.0 * n_source)


def domain_classifier(target: Dataset, source: Dataset, cfg: TrainConfig,
                      balanced: bool = True) -> LinearModel:
    """Logistic model of ``Pr(target | x)`` trained on features only.

    With ``balanced`` each domain carries half the total weight, so the
    predicted odds estimate the density ratio ``p_T(x) / p_S(x)``; otherwise
    rows are weighted uniformly and the odds carry the prior ``n_T / n_S``.
    """
    if target.n == 0 or source.n == 0:
        raise ValidationError("domain classifier needs non-empty target and source")
    check_same_dim(target, source)
    X = np.vstack([target.features, source.features])
    y = np.concatenate([np.ones(target.n, dtype=np.int64), np.zeros(source.n, dtype=np.int64)])
    if balanced:
        wt, ws = domain_balance_weights(target.n, source.n)
    else:
        wt = ws = 1.0
    weights = np.concatenate([np.full(target.n, wt), np.full(source.n, ws)])
    model, _ = train_sgd(Dataset(X, y), weights, cfg)
    return model


def clamp_probability(p):
    return np.clip(p, PROB_FLOOR, PROB_CEIL)


def import_weight(p, c: float):
    """Importance weight ``c / (1/p - 1)`` for a clamped target probability ``p``."""
    p = clamp_probability(np.asarray(p, dtype=np.float64))
    return c / (1.0 / p - 1.0)


def fit_pred(target: Dataset, source: Dataset, cfg: TrainConfig,
             evaluate_on: Dataset) -> MethodResult:
    """Weight every combined row by its predicted probability of being target."""
    start = time.perf_counter()
    clf = domain_classifier(target, source, cfg, balanced=True)
    data = concat(target, source)
    weights = clamp_probability(clf.predict_proba(data.features))
    model, _ = train_sgd(data, weights, cfg)
    return _result("pred", model, evaluate_on, start,
                   mean_weight=float(weights.mean()))


def fit_import(target: Dataset, source: Dataset, cfg: TrainConfig,
               evaluate_on: Dataset) -> MethodResult:
    """Target rows weight 1; source rows weight ``c / (1/p - 1)``, ``c = n_S / n_T``.

    The domain classifier is trained without class balancing so that
    ``c * p / (1 - p)`` estimates the density ratio.
    """
    start = time.perf_counter()
    clf = domain_classifier(target, source, cfg, balanced=False)
    c = source.n / target.n
    w_source = import_weight(clf.predict_proba(source.features), c)
    weights = np.concatenate([np.ones(target.n), w_source])
    model, _ = train_sgd(concat(target, source), weights, cfg)
    return _result("import", model, evaluate_on, start,
                   mean_source_weight=float(w_source.mean()))


# --------------------------------------------------------------------------
# feature augmentation


def feataug_transform(features, domain: str) -> np.ndarray:
    """Source rows become ``<x, x, 0>``, target rows ``<x, 0, x>``."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("features must be 2-D")
    zeros = np.zeros_like(X)
    if domain == "source":
        return np.hstack([X, X, zeros])
    if domain == "target":
        return np.hstack([X, zeros, X])
    raise ValidationError(f"domain must be 'source' or 'target', got {domain!r}")


def fit_feataug(target: Dataset, source: Dataset, cfg: TrainConfig,
                evaluate_on: Dataset) -> MethodResult:
    start = time.perf_counter()
    check_same_dim(target, source)
    parts = [target.with_features(feataug_transform(target.features, "target"))]
    if source.n:
        parts.append(source.with_features(feataug_transform(source.features, "source")))
    data = concat(*parts)
    model, _ = train_sgd(data, np.ones(data.n), cfg)
    return _result("feataug", model, evaluate_on, start, augmented=True)


METHODS = {
    "pred": fit_pred,
    "import": fit_import,
    "feataug": fit_feataug,
}
