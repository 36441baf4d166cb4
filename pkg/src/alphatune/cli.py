"""Command-line entry point.

Subcommands: ``fit``, ``benchmark``, ``sweep-sigma``, ``search-trace``, ``bound``.
Each prints a human-readable table on stdout and, with ``--out DIR``, writes
machine-readable files there (``report.json`` always; ``model.txt`` and
``trace.tsv`` where relevant). Files are only written once the whole command
has succeeded.

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict

from . import __version__
from .benchmark import (
    ALL_ROWS,
    prepare_data,
    run_benchmark,
    search_trace,
    strip_timing,
    sweep_sigma,
    synthetic_pool,
    tune_l2,
)
from .bound import BoundParams, convexity_check, g_table, minimize_g
from .dataset import SyntheticConfig
from .errors import ValidationError
from .linmodel import TrainConfig, dumps_model
from .search import AlphaEvaluator, STRATEGIES, run_strategy

log = logging.getLogger("alphatune")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3
REPORT_SCHEMA = "alphatune-report/1"


def _add_data_args(p, need_test=True):
    g = p.add_argument_group("data")
    g.add_argument("--target", help="target table (csv or libsvm)")
    g.add_argument("--source", help="source table (csv or libsvm)")
    g.add_argument("--format", default="csv", choices=["csv", "libsvm"])
    g.add_argument("--label-column", default=None, help="csv label column (default: last)")
    g.add_argument("--synthetic", action="store_true", help="generate the synthetic benchmark")
    g.add_argument("--n-target", type=int, default=None,
                   help="target training rows (downsampled); synthetic default 500")
    g.add_argument("--n-source", type=int, default=20000)
    g.add_argument("--d", type=int, default=50)
    g.add_argument("--sigma", type=float, default=2.0)
    g.add_argument("--noise-sd", type=float, default=1.0)
    if need_test:
        g.add_argument("--n-test", type=int, default=2000, help="synthetic target test rows")
        g.add_argument("--test-fraction", type=float, default=0.2)
    g.add_argument("--standardize", action="store_true",
                   help="z-score columns using target-train + source statistics")


def _add_train_args(p):
    g = p.add_argument_group("training")
    g.add_argument("--l2", type=float, default=TrainConfig.l2_penalty)
    g.add_argument("--tune-l2", action="store_true",
                   help="choose the L2 penalty by CV on the All baseline")
    g.add_argument("--eta0", type=float, default=TrainConfig.eta0)
    g.add_argument("--max-epochs", type=int, default=TrainConfig.max_epochs)
    g.add_argument("--tol", type=float, default=TrainConfig.tolerance)
    g.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)


def _add_search_args(p, strategy=True):
    g = p.add_argument_group("search")
    g.add_argument("--delta", type=float, default=0.01)
    g.add_argument("--k", type=int, default=5)
    if strategy:
        g.add_argument("--strategy", default="gss", choices=STRATEGIES)
    g.add_argument("--n-random", type=int, default=100, help="probes for random search")
    g.add_argument("--no-warm-start", action="store_true")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--no-timing", action="store_true",
                   help="omit wall-clock fields so reports are byte-reproducible")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphatune", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="search alpha and write the refit model")
    _add_data_args(p, need_test=False)
    _add_train_args(p)
    _add_search_args(p)
    _add_common(p)

    p = sub.add_parser("benchmark", help="compare baselines and methods on one split")
    _add_data_args(p)
    _add_train_args(p)
    _add_search_args(p)
    _add_common(p)
    p.add_argument("--methods", default=",".join(ALL_ROWS))

    p = sub.add_parser("sweep-sigma", help="synthetic benchmark over source spreads")
    _add_data_args(p)
    _add_train_args(p)
    _add_search_args(p, strategy=False)
    _add_common(p)
    p.add_argument("--sigmas", default="0,1,2,4,8")
    p.add_argument("--methods", default="target,source,all,crosstrainer,pred,import,feataug")

    p = sub.add_parser("search-trace", help="best-so-far accuracy per strategy")
    _add_data_args(p)
    _add_train_args(p)
    _add_search_args(p, strategy=False)
    _add_common(p)

    p = sub.add_parser("bound", help="tabulate the error bound g(alpha)")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--A", type=float, default=0.0)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p)
    return parser


# --------------------------------------------------------------------------
# helpers


def _validate_search(args):
    if not 0 < args.delta <= 0.5:
        raise ValidationError("--delta must lie in (0, 0.5]")
    if args.k < 2:
        raise ValidationError("--k must be >= 2")


def _train_config(args) -> TrainConfig:
    cfg = TrainConfig(l2_penalty=args.l2, eta0=args.eta0, max_epochs=args.max_epochs,
                      tolerance=args.tol, batch_size=args.batch_size, seed=args.seed)
    cfg.validate()
    return cfg


def _synthetic(args, with_test=True) -> SyntheticConfig:
    n_target = args.n_target or 500
    if with_test:
        return synthetic_pool(n_target, args.n_test, args.n_source, args.d, args.sigma,
                              args.noise_sd, args.seed)
    return SyntheticConfig(n_target, args.n_source, args.d, args.sigma, args.noise_sd, args.seed)


def _data(args, with_test=True):
    if args.synthetic:
        if args.target or args.source:
            raise ValidationError("--synthetic cannot be combined with --target/--source")
        syn = _synthetic(args, with_test)
        n_target = (args.n_target or 500) if with_test else None
        return prepare_data(synthetic=syn, n_target=n_target, seed=args.seed,
                            test_fraction=args.test_fraction if with_test else None,
                            standardize=args.standardize)
    if not args.target or not args.source:
        raise ValidationError("give --target and --source, or --synthetic")
    return prepare_data(target_path=args.target, source_path=args.source, fmt=args.format,
                        label_column=args.label_column, n_target=args.n_target,
                        test_fraction=args.test_fraction if with_test else None,
                        seed=args.seed, standardize=args.standardize)


def _maybe_tune(args, cfg, data):
    if not args.tune_l2:
        return cfg, None
    best, scores = tune_l2(data.target_train, data.source, cfg, k=args.k, seed=args.seed)
    log.info("tuned l2=%g", best)
    return cfg.replace(l2_penalty=best), {"chosen": best, "cv_accuracy": {repr(k): v for k, v in scores.items()}}


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


def _write_outputs(out_dir, files: dict[str, str]):
    """Write every file into ``out_dir`` via temp files + rename."""
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.remove(tmp)


def _envelope(command, args, body, timing):
    rep = {"schema": REPORT_SCHEMA, "command": command,
           "config": {k: v for k, v in vars(args).items() if k not in ("out", "verbose")}}
    rep.update(body)
    return rep if timing else strip_timing(rep)


# --------------------------------------------------------------------------
# commands


def cmd_fit(args):
    _validate_search(args)
    cfg = _train_config(args)
    data = _data(args, with_test=False)
    cfg, tuned = _maybe_tune(args, cfg, data)
    ev = AlphaEvaluator(data.target_train, data.source, args.k, cfg, args.seed,
                        warm_start=not args.no_warm_start)
    alpha_star, report = run_strategy(args.strategy, ev, args.delta, args.n_random, args.seed)
    timing = not args.no_timing
    body = {"delta": args.delta, "k": args.k, "alpha_star": alpha_star,
            "beta": data.info["beta"], "l2_tuning": tuned, "data": data.info,
            "train_config": asdict(cfg), "search": report.to_dict(timing)}
    files = {
        "report.json": _json(_envelope("fit", args, body, timing)),
        "model.txt": dumps_model(report.final_model, cfg, {"alpha_star": alpha_star}),
        "trace.tsv": report.to_records() if timing else strip_trace_timing(report.to_records()),
    }
    print(f"alpha* = {alpha_star:.6f}  (strategy={args.strategy}, delta={args.delta}, k={args.k}, "
          f"evaluations={report.n_evaluations})")
    print(f"best cv accuracy = {100 * report.best_accuracy:.2f}%")
    _write_outputs(args.out, files)


def strip_trace_timing(text: str) -> str:
    out = []
    for line in text.splitlines():
        if line.startswith("#"):
            out.append(line)
            continue
        cols = line.split("\t")
        out.append("\t".join(cols[:4] + cols[5:]))
    return "\n".join(out) + "\n"


def cmd_benchmark(args):
    _validate_search(args)
    cfg = _train_config(args)
    data = _data(args)
    cfg, tuned = _maybe_tune(args, cfg, data)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    report = run_benchmark(data, cfg, k=args.k, delta=args.delta, seed=args.seed,
                           methods=methods, strategy=args.strategy)
    timing = not args.no_timing
    body = report.to_dict(timing)
    body["l2_tuning"] = tuned
    print(report.render_table())
    _write_outputs(args.out, {"report.json": _json(_envelope("benchmark", args, body, timing)),
                              "table.tsv": _rows_tsv(report)})


def _rows_tsv(report) -> str:
    lines = ["method\ttest_accuracy"]
    lines += [f"{r.method_name}\t{r.test_accuracy!r}" for r in report.rows]
    return "\n".join(lines) + "\n"


def cmd_sweep_sigma(args):
    _validate_search(args)
    cfg = _train_config(args)
    if not args.synthetic:
        raise ValidationError("sweep-sigma requires --synthetic")
    sigmas = [float(s) for s in args.sigmas.split(",") if s.strip()]
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    base = _synthetic(args)
    sweep = sweep_sigma(base, sigmas, cfg, n_target=args.n_target or 500, k=args.k,
                        delta=args.delta, seed=args.seed, methods=methods,
                        standardize=args.standardize)
    timing = not args.no_timing
    table = sweep.render_table()
    print(table)
    _write_outputs(args.out, {"report.json": _json(_envelope("sweep-sigma", args, sweep.to_dict(timing), timing)),
                              "sweep.tsv": table + "\n"})


def cmd_search_trace(args):
    _validate_search(args)
    cfg = _train_config(args)
    data = _data(args)
    reports = search_trace(data, cfg, k=args.k, delta=args.delta, seed=args.seed,
                           n_random=args.n_random, warm_start=not args.no_warm_start)
    timing = not args.no_timing
    lines = ["strategy\titeration\talpha\tcv_accuracy\tbest_so_far"]
    for name, rep in reports.items():
        for i, (p, best) in enumerate(zip(rep.probes, rep.best_so_far())):
            lines.append(f"{name}\t{i + 1}\t{p.alpha!r}\t{p.cv_accuracy!r}\t{best!r}")
        print(f"{name:<8} evaluations={rep.n_evaluations:<4d} alpha*={rep.alpha_star:.4f} "
              f"best={100 * rep.best_accuracy:.2f}%")
    body = {"traces": {name: rep.to_dict(timing) for name, rep in reports.items()},
            "data": data.info}
    _write_outputs(args.out, {"report.json": _json(_envelope("search-trace", args, body, timing)),
                              "trace.tsv": "\n".join(lines) + "\n"})


def cmd_bound(args):
    params = BoundParams(args.beta, args.A, args.B)
    if not 0 < args.step <= 0.1:
        raise ValidationError("--step must lie in (0, 0.1]")
    table = g_table(params, args.step)
    alpha_g = minimize_g(params, args.tol)
    convex = convexity_check(params, args.step)
    lines = ["alpha\tg"] + [f"{a!r}\t{g!r}" for a, g in table]
    print("\n".join(lines))
    print(f"# alpha_g = {alpha_g:.6f}  convex = {convex}", file=sys.stderr)
    body = {"params": asdict(params), "alpha_g": alpha_g, "convex": convex,
            "table": [{"alpha": a, "g": g} for a, g in table]}
    _write_outputs(args.out, {"report.json": _json(_envelope("bound", args, body, True)),
                              "bound.tsv": "\n".join(lines) + "\n"})


COMMANDS = {
    "fit": cmd_fit,
    "benchmark": cmd_benchmark,
    "sweep-sigma": cmd_sweep_sigma,
    "search-trace": cmd_search_trace,
    "bound": cmd_bound,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"alphatune: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"alphatune: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
