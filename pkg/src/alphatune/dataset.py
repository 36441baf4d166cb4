"""Datasets: container type, loaders, synthetic generator and splitting utilities."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, ValidationError

DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with binary labels.

    Parameters
    ----------
    features : array-like, shape (n, d)
    labels : array-like, shape (n,)
        Values must be exactly 0 or 1.
    feature_names : list of str, optional
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str] | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {X.shape}")
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValidationError(
                f"labels length {y.shape} does not match {X.shape[0]} feature rows"
            )
        if y.size and not np.all((y == 0) | (y == 1)):
            raise ValidationError("labels must be 0 or 1")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise ValidationError("feature_names length must equal column count")
        object.__setattr__(self, "features", np.ascontiguousarray(X))
        object.__setattr__(self, "labels", y.astype(np.int64))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels)


def check_same_dim(*datasets: Dataset) -> int:
    dims = {ds.d for ds in datasets}
    if len(dims) != 1:
        raise ValidationError(f"datasets have mismatched dimensions {sorted(dims)}")
    return dims.pop()


def concat(*datasets: Dataset) -> Dataset:
    check_same_dim(*datasets)
    return Dataset(
        np.vstack([ds.features for ds in datasets]),
        np.concatenate([ds.labels for ds in datasets]),
        datasets[0].feature_names,
    )


# --------------------------------------------------------------------------
# synthetic benchmark


@dataclass(frozen=True)
class SyntheticConfig:
    n_target: int
    n_source: int
    d: int = 500
    sigma: float = 1.0
    noise_sd: float = 1.0
    seed: int = 0

    def validate(self):
        if self.n_target < 1 or self.n_source < 1:
            raise ConfigError("n_target and n_source must be >= 1")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if not self.sigma >= 0 or not self.noise_sd >= 0:
            raise ConfigError("sigma and noise_sd must be non-negative")


def source_weights(d: int, sigma: float, seed: int) -> np.ndarray:
    """Per-feature weights of the source labeling function, ``1 + sigma * z``.

    The standard-normal draw ``z`` depends only on ``(d, seed)``, so sweeping
    sigma rescales one fixed perturbation direction.
    """
    _, weight_seq, _ = np.random.SeedSequence(seed).spawn(3)
    z = np.random.default_rng(weight_seq).standard_normal(d)
    return 1.0 + sigma * z


def _label(X, coef, noise_sd, rng):
    eps = noise_sd * rng.standard_normal(X.shape[0])
    return (X @ coef + eps > 0).astype(np.int64)


def generate_synthetic(cfg: SyntheticConfig) -> tuple[Dataset, Dataset]:
    """Target and source samples from a shared standard-normal input distribution.

    Target rows are labeled ``1[sum_j x_j + eps > 0]``; source rows use
    perturbed weights ``c_j ~ N(1, sigma)`` drawn once per call. The target
    sample depends only on ``(n_target, d, noise_sd, seed)``.
    """
    cfg.validate()
    target_seq, _, source_seq = np.random.SeedSequence(cfg.seed).spawn(3)
    rng_t = np.random.default_rng(target_seq)
    Xt = rng_t.standard_normal((cfg.n_target, cfg.d))
    yt = _label(Xt, np.ones(cfg.d), cfg.noise_sd, rng_t)

    c = source_weights(cfg.d, cfg.sigma, cfg.seed)
    rng_s = np.random.default_rng(source_seq)
    Xs = rng_s.standard_normal((cfg.n_source, cfg.d))
    ys = _label(Xs, c, cfg.noise_sd, rng_s)
    return Dataset(Xt, yt), Dataset(Xs, ys)


# --------------------------------------------------------------------------
# file loaders


def _coerce_label(raw: str, line: int, path) -> int:
    try:
        v = float(raw)
    except ValueError:
        raise FormatError(f"label {raw!r} is not numeric", line, path) from None
    if v == 1:
        return 1
    if v == 0 or v == -1:
        return 0
    raise ValidationError(f"{path}:{line}: label {raw!r} is not binary (0/1 or -1/+1)")


def _load_csv(path, label_column):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty file", 1, path) from None
        header = [h.strip() for h in header]
        if label_column is None:
            label_idx = len(header) - 1
        elif label_column in header:
            label_idx = header.index(label_column)
        else:
            raise FormatError(f"label column {label_column!r} not in header", 1, path)
        names = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FormatError(
                    f"expected {len(header)} fields, found {len(row)}", line, path
                )
            labels.append(_coerce_label(row[label_idx].strip(), line, path))
            try:
                rows.append([float(c) for i, c in enumerate(row) if i != label_idx])
            except ValueError as exc:
                raise FormatError(f"non-numeric feature ({exc})", line, path) from None
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(X, np.array(labels, dtype=np.int64), names)


def _load_sparse(path, dim):
    declared = dim
    entries, labels = [], []
    max_idx = 0
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            if text.startswith("#"):
                key, _, val = text[1:].partition("=")
                if key.strip() == "d":
                    try:
                        declared = int(val)
                    except ValueError:
                        raise FormatError(f"bad dimension header {text!r}", line_no, path) from None
                continue
            parts = text.split()
            labels.append(_coerce_label(parts[0], line_no, path))
            row = {}
            for tok in parts[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j = int(idx)
                    v = float(val)
                except ValueError:
                    raise FormatError(f"bad entry {tok!r}", line_no, path) from None
                if not sep or j < 1:
                    raise FormatError(f"bad entry {tok!r} (indices are 1-based)", line_no, path)
                row[j - 1] = v
                max_idx = max(max_idx, j)
            entries.append((line_no, row))
    if not labels:
        raise FormatError("no data rows", None, path)
    d = declared if declared is not None else max_idx
    X = np.zeros((len(entries), d))
    for i, (line_no, row) in enumerate(entries):
        for j, v in row.items():
            if j >= d:
                raise FormatError(f"index {j + 1} exceeds declared d={d}", line_no, path)
            X[i, j] = v
    return Dataset(X, np.array(labels, dtype=np.int64))


def load_table(path, format: str = "csv", label_column: str | None = None,
               dim: int | None = None) -> Dataset:
    """Read a labeled table from disk.

    ``format`` is ``"csv"`` (header row required; ``label_column`` defaults to
    the last column) or ``"libsvm"`` (``label idx:val ...`` rows with 1-based
    indices; dimension from a ``#d=<int>`` line, ``dim``, or the largest index).
    Labels may be written as 0/1 or -1/+1.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    fmt = format.lower()
    if fmt == "csv":
        ds = _load_csv(path, label_column)
    elif fmt in ("libsvm", "sparse", "svmlight"):
        ds = _load_sparse(path, dim)
    else:
        raise ConfigError(f"unknown table format {format!r}")
    if ds.n == 0:
        raise FormatError("no data rows", None, path)
    return ds


def save_csv(ds: Dataset, path, label_column: str = "y"):
    names = ds.feature_names or [f"x{j}" for j in range(ds.d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + [label_column])
        for x, y in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


# --------------------------------------------------------------------------
# splitting


def split_train_test(ds: Dataset, test_fraction: float = 0.2, seed: int = 0):
    """Uniform random disjoint partition with ``round(test_fraction * n)`` test rows."""
    if ds.n < 2:
        raise ValidationError("need at least 2 rows to split")
    if not 0 < test_fraction < 1:
        raise ValidationError("test_fraction must lie in (0, 1)")
    n_test = int(round(test_fraction * ds.n))
    n_test = min(max(n_test, 1), ds.n - 1)
    perm = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(np.sort(perm[n_test:])), ds.subset(np.sort(perm[:n_test]))


def downsample(ds: Dataset, n: int, seed: int = 0) -> Dataset:
    if n < 0 or n > ds.n:
        raise ValidationError(f"cannot draw {n} rows from a dataset of {ds.n}")
    idx = np.random.default_rng(seed).permutation(ds.n)[:n]
    return ds.subset(idx)


def kfold_indices(n: int, k: int = DEFAULT_FOLDS, seed: int = 0):
    """Shuffled k-fold partition of ``range(n)``.

    Returns a list of ``(train_idx, val_idx)`` pairs. The first ``n % k`` folds
    get one extra validation row.
    """
    if k < 2 or k > n:
        raise ValidationError(f"need 2 <= k <= n, got k={k}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    folds = []
    start = 0
    for size in sizes:
        val = np.sort(perm[start:start + size])
        train = np.sort(np.concatenate([perm[:start], perm[start + size:]]))
        folds.append((train, val))
        start += size
    return folds


# --------------------------------------------------------------------------
# preprocessing


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, *datasets: Dataset) -> "Standardizer":
        X = np.vstack([ds.features for ds in datasets])
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(X.mean(axis=0), scale)

    def transform(self, ds: Dataset) -> Dataset:
        return Dataset((ds.features - self.mean) / self.scale, ds.labels, ds.feature_names)


def positive_rate(ds: Dataset) -> float:
    return float(ds.labels.mean()) if ds.n else math.nan
