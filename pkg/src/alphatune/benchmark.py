"""Workflows behind the CLI: data preparation, method comparison, sigma sweeps,
search-strategy traces.

Reports are plain dataclasses that serialize to JSON-compatible dicts.
Timing values are kept under keys named ``*seconds*``/``speedup`` (and the
``timing`` section) so that :func:`strip_timing` can drop them; everything
else is a deterministic function of the inputs and seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import (
    Dataset,
    Standardizer,
    SyntheticConfig,
    downsample,
    generate_synthetic,
    kfold_indices,
    load_table,
    split_train_test,
)
from .errors import ValidationError
from .linmodel import TrainConfig, accuracy, train_sgd
from .methods import METHODS, MethodResult, fit_baseline, fit_crosstrainer
from .reweight import alpha_weights, beta_of
from .search import AlphaEvaluator, run_strategy

DEFAULT_L2_GRID = (0.0, 1e-5, 1e-4, 1e-3, 1e-2)
BASELINE_ROWS = ("target", "source", "all")
ALL_ROWS = ("target", "source", "all", "crosstrainer", "crosstrainer_unopt",
            "pred", "import", "feataug")


@dataclass
class DomainData:
    target_train: Dataset
    source: Dataset
    target_test: Dataset | None = None
    info: dict = field(default_factory=dict)


def prepare_data(*, target_path=None, source_path=None, fmt="csv", label_column=None,
                 synthetic: SyntheticConfig | None = None, n_target: int | None = None,
                 test_fraction: float | None = 0.2, seed: int = 0,
                 standardize: bool = False) -> DomainData:
    """Load or generate target/source data, split off a target test set, downsample.

    ``test_fraction=None`` keeps every target row for training (the ``fit``
    workflow). ``n_target`` downsamples the target training rows.
    """
    if synthetic is not None:
        target, source = generate_synthetic(synthetic)
        info = {"synthetic": asdict(synthetic)}
    else:
        if target_path is None or source_path is None:
            raise ValidationError("need both a target and a source table (or synthetic data)")
        target = load_table(target_path, fmt, label_column)
        source = load_table(source_path, fmt, label_column)
        info = {"target_path": str(target_path), "source_path": str(source_path), "format": fmt}
    if target.d != source.d:
        raise ValidationError(f"target has d={target.d} but source has d={source.d}")

    test = None
    train = target
    if test_fraction is not None:
        train, test = split_train_test(target, test_fraction, seed)
    if n_target is not None:
        train = downsample(train, n_target, seed)
    if standardize:
        scaler = Standardizer.fit(train, source)
        train, source = scaler.transform(train), scaler.transform(source)
        test = scaler.transform(test) if test is not None else None
    info.update(n_target_train=train.n, n_source=source.n,
                n_target_test=test.n if test is not None else 0, d=train.d,
                standardize=standardize, beta=beta_of(train.n, source.n))
    return DomainData(train, source, test, info)


def synthetic_pool(n_target: int, n_test: int, n_source: int, d: int, sigma: float,
                   noise_sd: float, seed: int) -> SyntheticConfig:
    """Synthetic config whose 80/20 split leaves ``n_test`` test rows and at
    least ``n_target`` training rows to downsample from."""
    pool = max(5 * n_test, int(math.ceil(n_target / 0.8)) + n_test)
    return SyntheticConfig(pool, n_source, d, sigma, noise_sd, seed)


def tune_l2(target: Dataset, source: Dataset, cfg: TrainConfig, grid=DEFAULT_L2_GRID,
            k: int = 5, seed: int = 0) -> tuple[float, dict]:
    """Pick the L2 penalty by k-fold CV accuracy of the All baseline on target rows.

    Ties go to the larger penalty. Returns ``(best, {l2: cv_accuracy})``.
    """
    folds = kfold_indices(target.n, k, seed)
    scores = {}
    for l2 in grid:
        c = cfg.replace(l2_penalty=l2)
        accs = []
        for train_idx, val_idx in folds:
            part = target.subset(train_idx)
            data = Dataset(np.vstack([part.features, source.features]),
                           np.concatenate([part.labels, source.labels]))
            wt, ws = alpha_weights(beta_of(part.n, source.n), part.n, source.n)
            weights = np.concatenate([np.full(part.n, wt), np.full(source.n, ws)])
            model, _ = train_sgd(data, weights, c)
            accs.append(accuracy(model, target.subset(val_idx)))
        scores[l2] = float(np.mean(accs))
    best = max(sorted(grid, reverse=True), key=lambda l2: scores[l2])
    return best, scores


# --------------------------------------------------------------------------
# benchmark


@dataclass
class BenchmarkReport:
    rows: list[MethodResult]
    alpha_star: float
    search: dict
    timing: dict
    environment: dict

    def row(self, name: str) -> MethodResult:
        for r in self.rows:
            if r.method_name == name:
                return r
        raise KeyError(name)

    def accuracies(self) -> dict[str, float]:
        return {r.method_name: r.test_accuracy for r in self.rows}

    def to_dict(self, timing: bool = True) -> dict:
        rows = []
        for r in self.rows:
            row = {"method": r.method_name, "test_accuracy": r.test_accuracy}
            if "alpha" in r.info:
                row["alpha"] = r.info["alpha"]
            if timing:
                row["fit_seconds"] = r.fit_seconds
            rows.append(row)
        out = {"rows": rows, "alpha_star": self.alpha_star,
               "search": self.search if timing else strip_timing(self.search),
               "environment": self.environment}
        if timing:
            out["timing"] = self.timing
        return out

    def render_table(self) -> str:
        lines = [f"{'method':<20}{'test_acc':>10}{'fit_s':>10}"]
        for r in self.rows:
            lines.append(f"{r.method_name:<20}{100 * r.test_accuracy:>9.2f}%{r.fit_seconds:>10.2f}")
        lines.append(f"alpha* = {self.alpha_star:.6f}")
        if self.timing:
            t = self.timing
            lines.append("")
            lines.append(f"{'search':<20}{'seconds':>10}{'epochs':>10}")
            for key in ("baseline", "gss", "gss_warm"):
                if key in t:
                    lines.append(f"{key:<20}{t[key]['seconds']:>10.2f}{t[key]['epochs']:>10d}")
            if "speedup" in t:
                lines.append(f"speedup = {t['speedup']:.2f}x")
        return "\n".join(lines)


def strip_timing(obj):
    """Recursively drop timing-valued keys."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items()
                if "seconds" not in k and k not in ("timing", "speedup")}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def run_benchmark(data: DomainData, cfg: TrainConfig, *, k: int = 5, delta: float = 0.01,
                  seed: int = 0, methods=ALL_ROWS, timing_analysis: bool = True,
                  strategy: str = "gss") -> BenchmarkReport:
    """Fit every requested method on the same split and score on the same test rows.

    ``crosstrainer`` is the warm-started search with ``strategy``;
    ``crosstrainer_unopt`` is grid search with cold starts. With
    ``timing_analysis`` a cold-start golden-section run is added so the
    cumulative timing section has all three stages.
    """
    if data.target_test is None:
        raise ValidationError("benchmark needs a target test split")
    target, source, test = data.target_train, data.source, data.target_test
    rows: list[MethodResult] = []
    search = {}
    alpha_star = math.nan
    timing = {}
    for name in methods:
        if name in BASELINE_ROWS:
            rows.append(fit_baseline(name, target, source, cfg, test))
        elif name == "crosstrainer":
            res, rep = fit_crosstrainer(target, source, cfg, test, k, delta, seed, strategy, True)
            rows.append(res)
            alpha_star = rep.alpha_star
            search = rep.to_dict()
            timing["gss_warm"] = {"seconds": rep.search_seconds, "epochs": rep.epochs_total,
                                  "evaluations": rep.n_evaluations}
        elif name == "crosstrainer_unopt":
            res, rep = fit_crosstrainer(target, source, cfg, test, k, delta, seed, "grid",
                                        False, name="crosstrainer_unopt")
            rows.append(res)
            timing["baseline"] = {"seconds": rep.search_seconds, "epochs": rep.epochs_total,
                                  "evaluations": rep.n_evaluations}
        elif name in METHODS:
            rows.append(METHODS[name](target, source, cfg, test))
        else:
            raise ValidationError(f"unknown method {name!r}")

    if timing_analysis and "baseline" in timing and "gss_warm" in timing:
        ev = AlphaEvaluator(target, source, k, cfg, seed, warm_start=False)
        _, rep = run_strategy("gss", ev, delta, seed=seed, refit=False)
        timing["gss"] = {"seconds": rep.search_seconds, "epochs": rep.epochs_total,
                         "evaluations": rep.n_evaluations}
        base = timing["baseline"]["seconds"]
        timing["speedup_gss"] = base / timing["gss"]["seconds"]
        timing["speedup"] = base / timing["gss_warm"]["seconds"]
    elif "baseline" in timing and "gss_warm" in timing:
        timing["speedup"] = timing["baseline"]["seconds"] / timing["gss_warm"]["seconds"]

    env = {"seed": seed, "k": k, "delta": delta, "strategy": strategy,
           "train_config": asdict(cfg), "data": data.info}
    return BenchmarkReport(rows, alpha_star, search, timing, env)


@dataclass
class SweepReport:
    sigmas: list[float]
    reports: list[BenchmarkReport]

    def table(self) -> list[dict]:
        out = []
        for sigma, rep in zip(self.sigmas, self.reports):
            row = {"sigma": sigma, "alpha_star": rep.alpha_star}
            row.update(rep.accuracies())
            out.append(row)
        return out

    def to_dict(self, timing: bool = True) -> dict:
        return {"sigmas": self.sigmas, "table": self.table(),
                "reports": [r.to_dict(timing) for r in self.reports]}

    def render_table(self) -> str:
        names = [r.method_name for r in self.reports[0].rows]
        lines = ["sigma\t" + "\t".join(names) + "\talpha_star"]
        for sigma, rep in zip(self.sigmas, self.reports):
            acc = rep.accuracies()
            lines.append(f"{sigma:g}\t" + "\t".join(f"{100 * acc[n]:.2f}" for n in names)
                         + f"\t{rep.alpha_star:.4f}")
        return "\n".join(lines)


def sweep_sigma(base: SyntheticConfig, sigmas, cfg: TrainConfig, *, n_target: int,
                k: int = 5, delta: float = 0.01, seed: int = 0,
                methods=("target", "source", "all", "crosstrainer", "pred", "import", "feataug"),
                standardize: bool = False) -> SweepReport:
    """Benchmark once per source spread; the target sample and split stay fixed."""
    sigmas = [float(s) for s in sigmas]
    if not sigmas or any(not s >= 0 for s in sigmas):
        raise ValidationError("sigmas must be a non-empty list of non-negative values")
    reports = []
    for sigma in sigmas:
        syn = SyntheticConfig(base.n_target, base.n_source, base.d, sigma, base.noise_sd, base.seed)
        data = prepare_data(synthetic=syn, n_target=n_target, seed=seed, standardize=standardize)
        reports.append(run_benchmark(data, cfg, k=k, delta=delta, seed=seed, methods=methods,
                                     timing_analysis=False))
    return SweepReport(sigmas, reports)


def search_trace(data: DomainData, cfg: TrainConfig, *, k: int = 5, delta: float = 0.01,
                 seed: int = 0, n_random: int = 100, warm_start: bool = True) -> dict:
    """Run gss, grid and random search with identically configured evaluators.

    Returns ``{strategy: SearchReport}``.
    """
    out = {}
    for strategy in ("gss", "grid", "random"):
        ev = AlphaEvaluator(data.target_train, data.source, k, cfg, seed, warm_start)
        _, rep = run_strategy(strategy, ev, delta, n_random, seed, refit=False)
        out[strategy] = rep
    return out


