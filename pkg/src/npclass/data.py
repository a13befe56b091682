"""Labeled datasets, CSV ingestion, seeded splitting and the Gaussian models.

Randomness: every random draw takes an explicit seed. Derived streams come
from ``numpy.random.SeedSequence(seed, spawn_key=keys)`` feeding the default
PCG64 generator, so a replicate or split index always maps to the same
stream regardless of the order in which replicates are run.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .errors import DataFormatError, EmptyFileError, InvalidArgumentError, NonBinaryLabelError

_SQRT2 = math.sqrt(2.0)


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the sub-stream ``keys`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()
    label_name: str = "label"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.labels)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidArgumentError(f"features must be an n x d matrix with n, d >= 1, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise InvalidArgumentError(f"labels must have length {X.shape[0]}, got shape {y.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("features contain missing or non-finite values")
        if not np.all((y == 0) | (y == 1)):
            raise NonBinaryLabelError("labels must be 0 or 1")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InvalidArgumentError("feature_names length does not match feature count")
        X.setflags(write=False)
        y = y.astype(np.int8)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_indices(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def class_features(self, label: int) -> np.ndarray:
        return self.features[self.labels == label]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(self.features[idx], self.labels[idx], self.feature_names, self.label_name)

    def select_features(self, names: Sequence[str]) -> "LabeledDataset":
        cols = []
        for name in names:
            if name not in self.feature_names:
                raise InvalidArgumentError(f"unknown feature {name!r}; have {list(self.feature_names)}")
            cols.append(self.feature_names.index(name))
        return LabeledDataset(self.features[:, cols], self.labels, tuple(names), self.label_name)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.label_name == other.label_name
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
        )


def load_csv(path, label_column: str = "label") -> LabeledDataset:
    """Read a header-first CSV of numeric features plus a 0/1 label column.

    Row numbers in error messages count data rows from 1 (the header is row 0).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFileError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataFormatError(f"{path}: no label column {label_column!r} in header {header}")
        label_pos = header.index(label_column)
        feature_cols = [i for i in range(len(header)) if i != label_pos]
        if not feature_cols:
            raise DataFormatError(f"{path}: no feature columns")
        rows, labels = [], []
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, got {len(row)}", row=rownum)
            values = []
            for i in feature_cols:
                cell = row[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(f"non-numeric value {cell!r}", row=rownum, column=header[i]) from None
                if not math.isfinite(v):
                    raise DataFormatError(f"missing or non-finite value {cell!r}", row=rownum, column=header[i])
                values.append(v)
            cell = row[label_pos].strip()
            try:
                lab = float(cell)
            except ValueError:
                lab = None
            if lab not in (0.0, 1.0):
                raise NonBinaryLabelError(f"label {cell!r} is not 0 or 1", row=rownum, column=label_column)
            rows.append(values)
            labels.append(int(lab))
    if not rows:
        raise EmptyFileError(f"{path}: no data rows")
    return LabeledDataset(
        np.array(rows, dtype=float),
        np.array(labels, dtype=np.int8),
        tuple(header[i] for i in feature_cols),
        label_column,
    )


def load_feature_csv(path, columns: Sequence[str]) -> np.ndarray:
    """Read the named numeric columns of a header-first CSV (labels not needed)."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFileError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise DataFormatError(f"{path}: missing feature columns {missing} in header {header}")
        pos = [header.index(c) for c in columns]
        rows = []
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"expected {len(header)} fields, got {len(row)}", row=rownum)
            values = []
            for i in pos:
                cell = row[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(f"non-numeric value {cell!r}", row=rownum, column=header[i]) from None
                if not math.isfinite(v):
                    raise DataFormatError(f"missing or non-finite value {cell!r}", row=rownum, column=header[i])
                values.append(v)
            rows.append(values)
    if not rows:
        raise EmptyFileError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def save_csv(path, data: LabeledDataset) -> None:
    """Write ``data`` so that ``load_csv`` reproduces it exactly."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.feature_names) + [data.label_name])
        for x, y in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])


@dataclass(frozen=True)
class GaussianSpec:
    """Independent-feature Gaussian classes.

    ``class0_scale``/``class1_scale`` are variances or standard deviations
    depending on ``scale_convention``.
    """

    class0_mean: tuple[float, ...]
    class1_mean: tuple[float, ...]
    class0_scale: tuple[float, ...]
    class1_scale: tuple[float, ...]
    prior0: float = 0.5
    scale_convention: str = "variance"

    def __post_init__(self):
        d = len(self.class0_mean)
        if d < 1 or not all(len(v) == d for v in (self.class1_mean, self.class0_scale, self.class1_scale)):
            raise InvalidArgumentError("all GaussianSpec parameter vectors must share one length >= 1")
        if any(s <= 0 for s in self.class0_scale + self.class1_scale):
            raise InvalidArgumentError("scales must be positive")
        if not 0.0 < self.prior0 < 1.0:
            raise InvalidArgumentError("prior0 must lie in (0, 1)")
        if self.scale_convention not in ("variance", "sd"):
            raise InvalidArgumentError("scale_convention must be 'variance' or 'sd'")

    def sd(self, label: int) -> np.ndarray:
        scale = np.asarray(self.class1_scale if label else self.class0_scale, dtype=float)
        return np.sqrt(scale) if self.scale_convention == "variance" else scale

    def mean(self, label: int) -> np.ndarray:
        return np.asarray(self.class1_mean if label else self.class0_mean, dtype=float)


SIM1_SPEC = GaussianSpec((0.0,), (2.0,), (1.0,), (1.0,))


def sim2_spec(scale_convention: str = "variance") -> GaussianSpec:
    """Two independent features; the second has a wide class 1 spread (scale 6)."""
    return GaussianSpec((0.0, 0.0), (1.0, 1.0), (1.0, 1.0), (1.0, 6.0), 0.5, scale_convention)


def simulate(spec: GaussianSpec, n: int, seed) -> LabeledDataset:
    """Draw labels ~ Bernoulli(1 - prior0), then features from the class Gaussians."""
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    y = (rng.random(n) < 1.0 - spec.prior0).astype(np.int8)
    z = rng.standard_normal((n, len(spec.class0_mean)))
    mean = np.where(y[:, None] == 1, spec.mean(1), spec.mean(0))
    sd = np.where(y[:, None] == 1, spec.sd(1), spec.sd(0))
    return LabeledDataset(mean + sd * z, y)


S2_COEFFICIENTS = (3.0, 2.4, 1.8)
S2_CLASS1_MEAN = (2.0, 1.6, 1.2)
S2_MODELS = ("lr_model", "lda_model")


def simulate_s2(model: str, n: int, seed) -> LabeledDataset:
    """The two three-feature generative models used for the ensemble study.

    ``lr_model``: standard normal features, logistic labels with
    coefficients (3, 2.4, 1.8) and no intercept. ``lda_model``: balanced
    labels, identity-covariance Gaussians with means 0 and (2, 1.6, 1.2).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if model == "lr_model":
        X = rng.standard_normal((n, 3))
        p1 = lr_model_prob(X)
        y = (rng.random(n) < p1).astype(np.int8)
        return LabeledDataset(X, y)
    if model == "lda_model":
        spec = GaussianSpec((0.0, 0.0, 0.0), S2_CLASS1_MEAN, (1.0,) * 3, (1.0,) * 3)
        return simulate(spec, n, rng)
    raise InvalidArgumentError(f"unknown model {model!r}; expected one of {S2_MODELS}")


def lr_model_prob(X) -> np.ndarray:
    """P(Y = 1 | x) under the logistic generative model."""
    eta = np.asarray(X, dtype=float) @ np.asarray(S2_COEFFICIENTS)
    return 1.0 / (1.0 + np.exp(-eta))


def gaussian_type1(threshold, class0_mean: float = 0.0, class0_scale: float = 1.0):
    """P(X > t) for X ~ N(mean, sd^2): type I error of ``x > t`` (sd scale)."""
    if class0_scale <= 0:
        raise InvalidArgumentError("class0_scale must be positive")
    z = (np.asarray(threshold, dtype=float) - class0_mean) / class0_scale
    out = 0.5 * erfc(z / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def gaussian_type2(threshold, class1_mean: float = 2.0, class1_scale: float = 1.0):
    """P(X <= t) for X ~ N(mean, sd^2): type II error of ``x > t`` (sd scale)."""
    if class1_scale <= 0:
        raise InvalidArgumentError("class1_scale must be positive")
    z = (np.asarray(threshold, dtype=float) - class1_mean) / class1_scale
    out = 0.5 * erfc(-z / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def stratified_split_indices(labels, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Within each class, floor(fraction * n_c) shuffled indices go to part a."""
    if not 0.0 < fraction < 1.0:
        raise InvalidArgumentError("fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    part_a, part_b = [], []
    for label in (0, 1):
        idx = np.flatnonzero(labels == label)
        perm = rng.permutation(idx)
        cut = math.floor(fraction * idx.size)
        part_a.append(perm[:cut])
        part_b.append(perm[cut:])
    return np.sort(np.concatenate(part_a)), np.sort(np.concatenate(part_b))


def stratified_half_split(data: LabeledDataset, fraction: float = 0.5, seed=0):
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    a, b = stratified_split_indices(data.labels, fraction, rng)
    return data.subset(a), data.subset(b)
