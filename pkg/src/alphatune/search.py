"""Selecting alpha: bracketing + golden-section search, grid and random search.

Every strategy maximizes an *objective*, a callable ``alpha -> accuracy``.
:class:`AlphaEvaluator` is the real one (k-fold cross-validated target
accuracy with a warm-start cache); :class:`FunctionObjective` wraps any plain
function, which is how the search logic is tested in isolation.
"""

from __future__ import annotations

import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import DEFAULT_FOLDS, Dataset, check_same_dim, concat, kfold_indices
from .errors import ValidationError
from .linmodel import LinearModel, TrainConfig, accuracy, train_sgd
from .reweight import AlphaProblem, alpha_weights, train_at_alpha

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 0.618...
TIE_EPS = 1e-9
SAME_ALPHA_EPS = 1e-12
DEFAULT_DELTA = 0.01
STRATEGIES = ("gss", "grid", "random")


@dataclass(frozen=True)
class Probe:
    alpha: float
    cv_accuracy: float
    train_seconds: float = 0.0
    epochs_total: int = 0


class Objective:
    """Caching wrapper around an expensive ``alpha -> score`` map.

    Subclasses implement :meth:`_evaluate`. A request within ``1e-12`` of an
    already evaluated alpha is answered from the cache.
    """

    def __init__(self):
        self._alphas: list[float] = []
        self._probes: list[Probe] = []
        self.requests: list[float] = []

    @property
    def eval_count(self) -> int:
        return len(self._probes)

    @property
    def history(self) -> list[Probe]:
        return list(self._probes)

    def lookup(self, alpha: float) -> Probe | None:
        if not self._alphas:
            return None
        diffs = np.abs(np.asarray(self._alphas) - alpha)
        i = int(np.argmin(diffs))
        return self._probes[i] if diffs[i] <= SAME_ALPHA_EPS else None

    def probe(self, alpha: float) -> Probe:
        alpha = float(alpha)
        if not 0.0 <= alpha <= 1.0:
            raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
        self.requests.append(alpha)
        hit = self.lookup(alpha)
        if hit is not None:
            return hit
        result = self._evaluate(alpha)
        self._alphas.append(alpha)
        self._probes.append(result)
        return result

    def __call__(self, alpha: float) -> float:
        return self.probe(alpha).cv_accuracy

    def _evaluate(self, alpha: float) -> Probe:
        raise NotImplementedError

    def refit(self, alpha: float) -> LinearModel | None:
        return None


class FunctionObjective(Objective):
    def __init__(self, fn):
        super().__init__()
        self.fn = fn

    def _evaluate(self, alpha):
        return Probe(alpha, float(self.fn(alpha)))


class AlphaEvaluator(Objective):
    """k-fold cross-validated target accuracy of the alpha-weighted model.

    Folds split the target training rows only and stay fixed for the
    evaluator's lifetime; every fold trains on its target part plus the full
    source. With ``warm_start`` each fold's SGD starts from the coefficients
    that fold learned at the nearest previously probed alpha.
    """

    def __init__(self, target_train: Dataset, source: Dataset, k: int = DEFAULT_FOLDS,
                 cfg: TrainConfig | None = None, seed: int = 0, warm_start: bool = True,
                 n_jobs: int = 1):
        super().__init__()
        check_same_dim(target_train, source)
        if source.n < 1:
            raise ValidationError("source dataset is empty")
        self.target_train = target_train
        self.source = source
        self.k = k
        self.cfg = cfg or TrainConfig()
        self.seed = seed
        self.warm_start = warm_start
        self.n_jobs = n_jobs
        self.folds = kfold_indices(target_train.n, k, seed)
        self._fold_data: list = [None] * k
        self._fold_models: list[dict[float, LinearModel]] = [dict() for _ in range(k)]
        self._lock = threading.Lock()

    def _data(self, i):
        if self._fold_data[i] is None:
            train_idx, val_idx = self.folds[i]
            fold_target = self.target_train.subset(train_idx)
            self._fold_data[i] = (
                concat(fold_target, self.source),
                fold_target.n,
                self.target_train.subset(val_idx),
            )
        return self._fold_data[i]

    def _nearest(self, i, alpha):
        with self._lock:
            models = self._fold_models[i]
            if not models:
                return None
            best = min(models, key=lambda a: (abs(a - alpha), a))
            return models[best]

    def _fit_fold(self, i, alpha):
        data, n_t, val = self._data(i)
        wt, ws = alpha_weights(alpha, n_t, self.source.n)
        weights = np.concatenate([np.full(n_t, wt), np.full(self.source.n, ws)])
        init = self._nearest(i, alpha) if self.warm_start else None
        model, stats = train_sgd(data, weights, self.cfg, init)
        with self._lock:
            self._fold_models[i][alpha] = model
        return accuracy(model, val), stats.epochs_run

    def _evaluate(self, alpha):
        start = time.perf_counter()
        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                results = list(pool.map(lambda i: self._fit_fold(i, alpha), range(self.k)))
        else:
            results = [self._fit_fold(i, alpha) for i in range(self.k)]
        seconds = time.perf_counter() - start
        accs = [acc for acc, _ in results]
        return Probe(alpha, float(np.mean(accs)), seconds, int(sum(e for _, e in results)))

    def fold_model(self, fold: int, alpha: float) -> LinearModel | None:
        return self._fold_models[fold].get(alpha)

    def refit(self, alpha):
        model, _ = train_at_alpha(AlphaProblem(self.target_train, self.source, alpha), self.cfg)
        return model


def cv_accuracy(evaluator: Objective, alpha: float) -> float:
    return evaluator(alpha)


# --------------------------------------------------------------------------
# reports


@dataclass
class SearchReport:
    strategy: str
    delta: float | None
    alpha_star: float
    probes: list[Probe]
    final_model: LinearModel | None = None
    n_evaluations: int = 0
    bracket: tuple[float, float, float] | None = None
    bracket_evaluations: int = 0
    golden_iterations: int = 0
    refit_seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def search_seconds(self) -> float:
        return float(sum(p.train_seconds for p in self.probes))

    @property
    def epochs_total(self) -> int:
        return int(sum(p.epochs_total for p in self.probes))

    @property
    def best_accuracy(self) -> float:
        return max(p.cv_accuracy for p in self.probes)

    def best_so_far(self) -> list[float]:
        return [float(v) for v in np.maximum.accumulate([p.cv_accuracy for p in self.probes])]

    def to_dict(self, timing: bool = True) -> dict:
        probes = []
        for i, p in enumerate(self.probes):
            row = {"iteration": i + 1, "alpha": p.alpha, "cv_accuracy": p.cv_accuracy,
                   "epochs_total": p.epochs_total}
            if timing:
                row["train_seconds"] = p.train_seconds
            probes.append(row)
        out = {
            "strategy": self.strategy,
            "delta": self.delta,
            "alpha_star": self.alpha_star,
            "n_evaluations": self.n_evaluations,
            "bracket": list(self.bracket) if self.bracket else None,
            "bracket_evaluations": self.bracket_evaluations,
            "golden_iterations": self.golden_iterations,
            "epochs_total": self.epochs_total,
            "best_so_far": self.best_so_far(),
            "probes": probes,
        }
        if timing:
            out["search_seconds"] = self.search_seconds
            out["refit_seconds"] = self.refit_seconds
        out.update(self.extra)
        return out

    def to_records(self) -> str:
        """Line-oriented trace: a header line then one tab-separated row per probe."""
        lines = [f"# strategy={self.strategy} delta={self.delta} alpha_star={self.alpha_star!r}",
                 "iteration\talpha\tcv_accuracy\tbest_so_far\ttrain_seconds\tepochs_total"]
        for i, (p, best) in enumerate(zip(self.probes, self.best_so_far())):
            lines.append(f"{i + 1}\t{p.alpha!r}\t{p.cv_accuracy!r}\t{best!r}\t"
                         f"{p.train_seconds:.6f}\t{p.epochs_total}")
        return "\n".join(lines) + "\n"


class _Session:
    """Tracks what one search run asked of a (possibly shared) objective."""

    def __init__(self, objective):
        self.objective = objective if isinstance(objective, Objective) else FunctionObjective(objective)
        self._req0 = len(self.objective.requests)
        self._eval0 = self.objective.eval_count

    @property
    def evaluations(self) -> int:
        return self.objective.eval_count - self._eval0

    def probes(self) -> list[Probe]:
        seen, out = [], []
        for a in self.objective.requests[self._req0:]:
            p = self.objective.lookup(a)
            if not any(abs(p.alpha - s) <= SAME_ALPHA_EPS for s in seen):
                seen.append(p.alpha)
                out.append(p)
        return out

    def report(self, strategy, delta, alpha_star, refit=True, **kw) -> SearchReport:
        start = time.perf_counter()
        model = self.objective.refit(alpha_star) if refit else None
        return SearchReport(strategy, delta, alpha_star, self.probes(), model,
                            self.evaluations, refit_seconds=time.perf_counter() - start, **kw)


def _check_delta(delta):
    if not 0.0 < delta <= 0.5:
        raise ValidationError(f"delta must lie in (0, 0.5], got {delta}")


def _better(a: float, b: float) -> bool:
    return a > b + TIE_EPS


# --------------------------------------------------------------------------
# bracket + golden-section search


def find_bracket(l: float, r: float, delta: float, evaluator):
    """Binary narrowing of ``[l, r]`` until the midpoint is the best of three.

    Stops when ``r - l < delta`` or the midpoint's accuracy ties or beats both
    ends; otherwise continues in the half whose end scores higher (right on
    ties).
    """
    if not 0.0 <= l < r <= 1.0:
        raise ValidationError(f"need 0 <= l < r <= 1, got l={l}, r={r}")
    f = evaluator if callable(evaluator) else evaluator.__call__
    while True:
        m = (l + r) / 2.0
        a_l, a_m, a_r = f(l), f(m), f(r)
        if r - l < delta or not (_better(a_l, a_m) or _better(a_r, a_m)):
            return l, m, r
        if not _better(a_l, a_r):
            l = m
        else:
            r = m


def _golden(l, m, r, delta, f):
    if not l < m < r:
        raise ValidationError(f"need l < m < r, got ({l}, {m}, {r})")
    a_m = f(m)
    if _better(f(l), a_m) or _better(f(r), a_m):
        raise ValidationError("invalid bracket: midpoint is not the best of the three probes")
    a, b = l, r
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    candidates = [m, c, d]
    iterations = 0
    while b - a >= delta:
        iterations += 1
        if not _better(fd, fc):
            b, d, fd = d, c, fc
            if b - a < delta:
                break
            c = b - INV_PHI * (b - a)
            fc = f(c)
            candidates.append(c)
        else:
            a, c, fc = c, d, fd
            if b - a < delta:
                break
            d = a + INV_PHI * (b - a)
            fd = f(d)
            candidates.append(d)
    best = candidates[0]
    for x in candidates[1:]:
        if _better(f(x), f(best)):
            best = x
    return best, iterations


def golden_section_search(l: float, m: float, r: float, delta: float, evaluator) -> float:
    """Maximize a unimodal objective inside the bracket ``l < m < r``.

    Each iteration shrinks the interval by ``1/phi`` and costs one new
    evaluation; stops once the interval is narrower than ``delta`` and returns
    the best alpha probed (the bracket midpoint included).
    """
    f = evaluator if callable(evaluator) else evaluator.__call__
    return _golden(l, m, r, delta, f)[0]


def golden_iterations_bound(width: float, delta: float) -> int:
    if width < delta:
        return 0
    return math.ceil(math.log(delta / width) / math.log(INV_PHI))


def find_weighting(evaluator, delta: float = DEFAULT_DELTA, refit: bool = True):
    """Bracket the best alpha on ``[0, 1]`` then refine it by golden-section search.

    Returns ``(alpha_star, SearchReport)``. If the bracket's right (left) end
    beats its midpoint, that end is returned without golden-section refinement.
    """
    _check_delta(delta)
    session = _Session(evaluator)
    f = session.objective
    l, m, r = find_bracket(0.0, 1.0, delta, f)
    bracket_evals = session.evaluations
    iterations = 0
    if _better(f(r), f(m)):
        alpha_star = r
    elif _better(f(l), f(m)):
        alpha_star = l
    else:
        alpha_star, iterations = _golden(l, m, r, delta, f)
    return alpha_star, session.report(
        "gss", delta, alpha_star, refit, bracket=(l, m, r),
        bracket_evaluations=bracket_evals, golden_iterations=iterations,
    )


def grid_alphas(delta: float) -> list[float]:
    """``0, delta, 2*delta, ..., 1`` (1 appended when ``1/delta`` is not integral)."""
    _check_delta(delta)
    steps = 1.0 / delta
    if abs(steps - round(steps)) < 1e-9:
        n = int(round(steps))
        return [i / n for i in range(n + 1)]
    alphas = [i * delta for i in range(int(math.floor(steps)) + 1)]
    return alphas + [1.0]


def grid_search(evaluator, delta: float = DEFAULT_DELTA, refit: bool = True):
    """Evaluate every grid point; ties go to the smaller alpha."""
    session = _Session(evaluator)
    f = session.objective
    best, best_val = None, -math.inf
    for a in grid_alphas(delta):
        v = f(a)
        if best is None or _better(v, best_val):
            best, best_val = a, v
    return best, session.report("grid", delta, best, refit)


def random_search(evaluator, n_probes: int = 100, seed: int = 0, refit: bool = True):
    """Uniform random alphas; the first draw attaining the maximum wins."""
    if n_probes < 1:
        raise ValidationError("n_probes must be >= 1")
    session = _Session(evaluator)
    f = session.objective
    best, best_val = None, -math.inf
    for a in np.random.default_rng(seed).uniform(0.0, 1.0, n_probes):
        v = f(float(a))
        if best is None or _better(v, best_val):
            best, best_val = float(a), v
    return best, session.report("random", None, best, refit, extra={"n_probes": n_probes, "seed": seed})


def run_strategy(strategy: str, evaluator, delta: float = DEFAULT_DELTA, n_probes: int = 100,
                 seed: int = 0, refit: bool = True):
    if strategy == "gss":
        return find_weighting(evaluator, delta, refit)
    if strategy == "grid":
        return grid_search(evaluator, delta, refit)
    if strategy == "random":
        return random_search(evaluator, n_probes, seed, refit)
    raise ValidationError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
