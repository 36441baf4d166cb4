"""Weighted logistic regression trained by minibatch SGD with warm starts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._sgd import sgd_epoch
from .dataset import Dataset
from .errors import ConfigError, FormatError, ValidationError

PROB_CLAMP = 1e-12
# logit(1 - 1e-12): clamping the margin here clamps the probability to [1e-12, 1 - 1e-12]
_MARGIN_CLAMP = math.log((1.0 - PROB_CLAMP) / PROB_CLAMP)

SCHEDULES = ("invscaling", "constant")
WEIGHTINGS = ("sample", "scale")


@dataclass(frozen=True)
class LinearModel:
    coefficients: np.ndarray
    intercept: float = 0.0

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(coef)) or not math.isfinite(self.intercept):
            raise ValidationError("model parameters must be finite")
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def d(self) -> int:
        return self.coefficients.shape[0]

    @classmethod
    def zeros(cls, d: int) -> "LinearModel":
        return cls(np.zeros(d), 0.0)

    def decision_function(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ValidationError(
                f"feature matrix has shape {X.shape}, model expects {self.d} columns"
            )
        return X @ self.coefficients + self.intercept

    def predict_proba(self, features) -> np.ndarray:
        return _sigmoid(self.decision_function(features))

    def __eq__(self, other):
        if not isinstance(other, LinearModel):
            return NotImplemented
        return (self.intercept == other.intercept
                and np.array_equal(self.coefficients, other.coefficients))

    __hash__ = None


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters.

    The learning rate at update ``t`` is ``eta0 / (1 + decay * t)`` for the
    ``"invscaling"`` schedule. Training stops once the epoch-over-epoch relative
    loss improvement drops below ``tolerance`` (checked from the second epoch
    on) or after ``max_epochs``. With ``average`` the returned model is the
    running mean of all SGD iterates.

    ``weighting`` decides how instance weights enter SGD. ``"sample"`` makes
    each epoch ``n`` draws (``n`` = rows passed in, zero-weight rows
    included) with probability proportional to weight and takes unweighted
    steps; ``"scale"`` visits every nonzero-weight row once and multiplies its
    gradient by its weight. Both minimize the same weighted loss, but
    sampling keeps the step variance bounded when a few rows carry most of
    the weight, and gives every alpha the same amount of work per epoch.
    """

    l2_penalty: float = 1e-4
    learning_rate: str = "invscaling"
    eta0: float = 0.1
    decay: float = 1e-3
    max_epochs: int = 200
    tolerance: float = 1e-3
    batch_size: int = 32
    seed: int = 0
    average: bool = True
    weighting: str = "sample"

    def validate(self):
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ConfigError("max_epochs and batch_size must be >= 1")
        if not self.l2_penalty >= 0 or not self.tolerance >= 0:
            raise ConfigError("l2_penalty and tolerance must be non-negative")
        if self.learning_rate not in SCHEDULES:
            raise ConfigError(f"learning_rate must be one of {SCHEDULES}")
        if self.weighting not in WEIGHTINGS:
            raise ConfigError(f"weighting must be one of {WEIGHTINGS}")
        if not self.eta0 > 0 or not self.decay >= 0:
            raise ConfigError("eta0 must be positive and decay non-negative")

    def replace(self, **changes) -> "TrainConfig":
        fields = asdict(self)
        fields.update(changes)
        return TrainConfig(**fields)


@dataclass(frozen=True)
class TrainStats:
    epochs_run: int
    final_loss: float
    converged: bool
    steps: int = 0


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def _check_weights(weights, n) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValidationError(f"weights have shape {w.shape}, expected ({n},)")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValidationError("weights must be finite and non-negative")
    if not np.any(w > 0):
        raise ValidationError("weights are all zero")
    return w


def _row_losses(z, y):
    z = np.clip(z, -_MARGIN_CLAMP, _MARGIN_CLAMP)
    # -log sigmoid(z) for positives, -log(1 - sigmoid(z)) for negatives
    return np.logaddexp(0.0, np.where(y == 1, -z, z))


def _loss(X, y, w, coef, intercept, l2):
    per_row = _row_losses(X @ coef + intercept, y)
    return float(w @ per_row / w.sum() + l2 * (coef @ coef))


def weighted_loss(model: LinearModel, ds: Dataset, weights, l2_penalty: float = 0.0) -> float:
    """Weight-normalized log-loss plus ``l2_penalty * ||coefficients||^2``."""
    w = _check_weights(weights, ds.n)
    if model.d != ds.d:
        raise ValidationError(f"model has d={model.d}, data has d={ds.d}")
    return _loss(ds.features, ds.labels, w, model.coefficients, model.intercept, l2_penalty)


def loss_gradient(model: LinearModel, ds: Dataset, weights, l2_penalty: float = 0.0):
    """Analytic gradient of :func:`weighted_loss`.

    Returns ``(grad_coefficients, grad_intercept)``. Ignores the probability
    clamp, so it is exact wherever ``|margin| < 27.6``.
    """
    w = _check_weights(weights, ds.n)
    z = ds.features @ model.coefficients + model.intercept
    r = w * (_sigmoid(z) - ds.labels) / w.sum()
    return ds.features.T @ r + 2.0 * l2_penalty * model.coefficients, float(r.sum())


def canonical_weights(weights) -> np.ndarray:
    """Scale weights to max 1 and round to single precision.

    Makes training invariant, bit for bit, to multiplying every weight by a
    positive constant: the rescaled ratios agree to within a few ulps, far
    below float32 resolution.
    """
    w = np.asarray(weights, dtype=np.float64)
    return (w / w.max()).astype(np.float32).astype(np.float64)


def train_sgd(ds: Dataset, weights, cfg: TrainConfig | None = None,
              init: LinearModel | None = None) -> tuple[LinearModel, TrainStats]:
    """Fit a weighted logistic model; warm-starts from ``init`` when given.

    Zero-weight rows are never visited, though under ``"sample"`` weighting
    they still count toward the epoch length.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    if ds.n == 0:
        raise ValidationError("cannot train on an empty dataset")
    w = canonical_weights(_check_weights(weights, ds.n))
    if init is not None and init.d != ds.d:
        raise ValidationError(f"init model has d={init.d}, data has d={ds.d}")

    n_draws = ds.n
    keep = w > 0
    if keep.all():
        X, y = ds.features, ds.labels.astype(np.float64)
    else:
        X, y, w = ds.features[keep], ds.labels[keep].astype(np.float64), w[keep]
    X = np.ascontiguousarray(X)
    n, d = X.shape

    if init is None:
        coef, intercept = np.zeros(d), 0.0
    else:
        coef, intercept = init.coefficients.copy(), init.intercept
    avg = np.append(coef, intercept)
    n_avg = 0
    t = 0
    invscaling = cfg.learning_rate == "invscaling"
    rng = np.random.default_rng(cfg.seed)
    sample = cfg.weighting == "sample"
    if sample:
        cdf = np.cumsum(w)
        cdf /= cdf[-1]
        step_w, mean_weight = np.ones(n), 1.0
    else:
        step_w, mean_weight = w, float(w.mean())

    # the starting point competes too: a warm start that is already optimal
    # within tolerance costs one epoch and comes back unchanged
    best_loss = _loss(X, y, w, coef, intercept, cfg.l2_penalty)
    best = (coef.copy(), intercept)
    converged = False
    epoch = 0
    for epoch in range(1, cfg.max_epochs + 1):
        if sample:
            order = np.minimum(np.searchsorted(cdf, rng.random(n_draws), side="right"), n - 1)
        else:
            order = rng.permutation(n)
        intercept, t, n_avg = sgd_epoch(
            X, y, step_w, order, coef, intercept, avg, n_avg, cfg.eta0, cfg.decay, t,
            cfg.batch_size, cfg.l2_penalty, mean_weight, invscaling,
        )
        if cfg.average:
            cur_coef, cur_b = avg[:d], float(avg[d])
        else:
            cur_coef, cur_b = coef, intercept
        loss = _loss(X, y, w, cur_coef, cur_b, cfg.l2_penalty)
        if not math.isfinite(loss):
            raise ValidationError("SGD diverged; lower eta0")
        prev_best = best_loss
        if loss < best_loss:
            best_loss, best = loss, (cur_coef.copy(), cur_b)
        if prev_best - loss < cfg.tolerance * abs(prev_best):
            converged = True
            break

    return LinearModel(*best), TrainStats(epoch, best_loss, converged, t)


def predict(model: LinearModel, features) -> np.ndarray:
    """Labels ``1[coefficients . x + intercept > 0]``; a zero margin predicts 0."""
    return (model.decision_function(features) > 0).astype(np.int64)


def accuracy(model: LinearModel, ds: Dataset) -> float:
    if ds.n == 0:
        raise ValidationError("accuracy of an empty dataset is undefined")
    return float(np.mean(predict(model, ds.features) == ds.labels))


# --------------------------------------------------------------------------
# text serialization
#
#   # alphatune linear model
#   format = alphatune-linear-model/1
#   d = <int>
#   intercept = <float>
#   coefficients = <float> <float> ...
#   config.<field> = <value>       (optional echo of the TrainConfig)
#
# Floats are written with 17 significant digits, so a round trip is exact.

MODEL_FORMAT = "alphatune-linear-model/1"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps_model(model: LinearModel, cfg: TrainConfig | None = None, extra=None) -> str:
    lines = [
        "# alphatune linear model",
        f"format = {MODEL_FORMAT}",
        f"d = {model.d}",
        f"intercept = {_fmt(model.intercept)}",
        "coefficients = " + " ".join(_fmt(c) for c in model.coefficients),
    ]
    if cfg is not None:
        for key, val in asdict(cfg).items():
            lines.append(f"config.{key} = {val}")
    for key, val in (extra or {}).items():
        lines.append(f"{key} = {_fmt(val) if isinstance(val, float) else val}")
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> tuple[LinearModel, dict]:
    """Parse :func:`dumps_model` output; returns the model and remaining keys."""
    record = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise FormatError(f"expected 'key = value', got {line!r}", line_no)
        record[key.strip()] = (val.strip(), line_no)
    try:
        if record["format"][0] != MODEL_FORMAT:
            raise FormatError(f"unsupported format {record['format'][0]!r}", record["format"][1])
        d = int(record.pop("d")[0])
        intercept = float(record.pop("intercept")[0])
        coef_text, coef_line = record.pop("coefficients")
    except KeyError as exc:
        raise FormatError(f"missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    record.pop("format")
    coef = np.array([float(v) for v in coef_text.split()], dtype=np.float64)
    if coef.shape[0] != d:
        raise FormatError(f"declared d={d} but found {coef.shape[0]} coefficients", coef_line)
    return LinearModel(coef, intercept), {k: v for k, (v, _) in record.items()}


def save_model(model: LinearModel, path, cfg: TrainConfig | None = None, extra=None):
    with open(path, "w") as fh:
        fh.write(dumps_model(model, cfg, extra))


def load_model(path) -> tuple[LinearModel, dict]:
    with open(path) as fh:
        return loads_model(fh.read())
