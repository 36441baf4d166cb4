"""The alpha-weighted training problem: a convex mix of target and source error."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, check_same_dim, concat
from .linmodel import LinearModel, TrainConfig, TrainStats, predict, train_sgd
from .errors import ValidationError


def _check_alpha(alpha: float):
    if not 0.0 <= alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")


@dataclass(frozen=True)
class AlphaProblem:
    target: Dataset
    source: Dataset
    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        check_same_dim(self.target, self.source)

    @property
    def beta(self) -> float:
        return self.target.n / (self.target.n + self.source.n)

    @property
    def m(self) -> int:
        return self.target.n + self.source.n


def alpha_weights(alpha: float, n_target: int, n_source: int) -> tuple[float, float]:
    """Per-row weights ``(alpha*m/n_T, (1-alpha)*m/n_S)`` with ``m = n_T + n_S``.

    Every row gets weight 1 when ``alpha`` equals the target fraction.
    """
    _check_alpha(alpha)
    if n_target < 1 or n_source < 1:
        raise ValidationError("both domains need at least one row")
    m = n_target + n_source
    return alpha * m / n_target, (1.0 - alpha) * m / n_source


def beta_of(n_target: int, n_source: int) -> float:
    return n_target / (n_target + n_source)


def problem_data(problem: AlphaProblem) -> tuple[Dataset, np.ndarray]:
    """Target-then-source concatenation and the matching weight vector."""
    wt, ws = alpha_weights(problem.alpha, problem.target.n, problem.source.n)
    weights = np.concatenate([np.full(problem.target.n, wt), np.full(problem.source.n, ws)])
    return concat(problem.target, problem.source), weights


def train_at_alpha(problem: AlphaProblem, cfg: TrainConfig | None = None,
                   init: LinearModel | None = None) -> tuple[LinearModel, TrainStats]:
    data, weights = problem_data(problem)
    return train_sgd(data, weights, cfg, init)


def empirical_alpha_error(model: LinearModel, problem: AlphaProblem) -> float:
    """``alpha * (target 0/1 error) + (1 - alpha) * (source 0/1 error)``."""
    if problem.target.n == 0 or problem.source.n == 0:
        raise ValidationError("alpha-error needs non-empty target and source")
    err_t = float(np.mean(predict(model, problem.target.features) != problem.target.labels))
    err_s = float(np.mean(predict(model, problem.source.features) != problem.source.labels))
    return problem.alpha * err_t + (1.0 - problem.alpha) * err_s
