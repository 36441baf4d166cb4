"""The target-error bound ``g(alpha)`` of the alpha-weighted minimizer.

    g(alpha) = 2 B sqrt(alpha^2 / beta + (1 - alpha)^2 / (1 - beta)) + 2 (1 - alpha) A

``A`` measures source/target divergence and ``B`` classifier complexity; both
are user inputs, never estimated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .search import find_weighting


@dataclass(frozen=True)
class BoundParams:
    beta: float
    A: float = 0.0
    B: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValidationError(f"beta must lie in (0, 1), got {self.beta}")
        if not (self.A >= 0 and self.B >= 0):
            raise ValidationError("A and B must be non-negative")


def g_alpha(alpha, p: BoundParams):
    """Evaluate the bound; accepts a scalar or an array of alphas."""
    a = np.asarray(alpha, dtype=np.float64)
    if np.any((a < 0) | (a > 1)):
        raise ValidationError("alpha must lie in [0, 1]")
    radical = np.sqrt(a * a / p.beta + (1.0 - a) ** 2 / (1.0 - p.beta))
    g = 2.0 * p.B * radical + 2.0 * (1.0 - a) * p.A
    return float(g) if g.ndim == 0 else g


def minimize_g(p: BoundParams, tol: float = 1e-6) -> float:
    """Minimizer of the convex bound over ``[0, 1]``, to within ``tol``.

    Runs the same bracket + golden-section routine used for alpha selection,
    on ``-g``.
    """
    if not tol > 0:
        raise ValidationError("tol must be positive")
    alpha, _ = find_weighting(lambda a: -g_alpha(a, p), delta=min(tol, 0.5), refit=False)
    return alpha


def second_differences(p: BoundParams, grid_step: float) -> np.ndarray:
    n = int(math.floor(1.0 / grid_step + 1e-9))
    alphas = np.arange(n + 1) * grid_step
    g = g_alpha(alphas, p)
    return g[:-2] - 2.0 * g[1:-1] + g[2:]


def convexity_check(p: BoundParams, grid_step: float = 0.01, floor: float = -1e-9) -> bool:
    """True when every second central difference of g on the grid is ``>= floor``."""
    if not 0.0 < grid_step <= 0.1:
        raise ValidationError("grid_step must lie in (0, 0.1]")
    return bool(np.all(second_differences(p, grid_step) >= floor))


def g_table(p: BoundParams, step: float = 0.01) -> list[tuple[float, float]]:
    n = int(round(1.0 / step))
    alphas = [i / n for i in range(n + 1)]
    return [(a, g_alpha(a, p)) for a in alphas]
