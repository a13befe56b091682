"""The umbrella procedure: random splits, per-split calibration, majority vote.

For each of M splits, class 0 training data is divided into a scorer-fitting
part and a left-out calibration part; all class 1 data goes to the scorer.
The scorer's scores on the left-out class 0 part set that member's
threshold. Band construction (``fit_band``) instead halves both classes,
since the left-out class 1 scores are needed for the type II error bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .band import DEFAULT_GRID_SIZE, NPROCBand, average_bands, band_from_split
from .data import LabeledDataset, derive_rng, stratified_split_indices
from .errors import InsufficientSampleError, InvalidArgumentError
from .models import ScoreModel, model_from_dict
from .threshold import NPThreshold, ViolationParams, min_class0_size, select_threshold

MODEL_FORMAT = "npclass.ensemble"
MODEL_VERSION = 1

Learner = Callable[[LabeledDataset], ScoreModel]


@dataclass(frozen=True)
class SplitPlan:
    """How to split: M random splits seeded from ``seed``; split i uses the
    stream ``derive_rng(seed, i)`` so member i is the same for every M > i."""

    M: int = 1
    class0_calibration_fraction: float = 0.5
    seed: int = 0
    alpha: float = 0.05
    delta: float = 0.05

    def __post_init__(self):
        if isinstance(self.M, bool) or not isinstance(self.M, (int, np.integer)) or self.M < 1:
            raise InvalidArgumentError(f"M must be a positive integer, got {self.M!r}")
        if not 0.0 < self.class0_calibration_fraction < 1.0:
            raise InvalidArgumentError("class0_calibration_fraction must lie in (0, 1)")
        ViolationParams(1, self.alpha, self.delta)


@dataclass(frozen=True)
class NPEnsemble:
    members: tuple[tuple[ScoreModel, NPThreshold], ...]
    plan: SplitPlan
    feature_names: tuple[str, ...] = ()

    @property
    def M(self) -> int:
        return len(self.members)

    @property
    def n_features(self) -> int:
        return self.members[0][0].n_features

    def votes(self, X) -> np.ndarray:
        """Number of members predicting class 1, per row."""
        total = None
        for model, thr in self.members:
            v = (model.score(X) > thr.threshold).astype(np.int32)
            total = v if total is None else total + v
        return total

    def predict_batch(self, X) -> np.ndarray:
        # strict majority; a tie (even M) goes to class 0
        return (2 * self.votes(X) > self.M).astype(np.int8)

    def predict(self, x) -> int:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        return int(self.predict_batch(x)[0])

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "alpha": self.plan.alpha,
            "delta": self.plan.delta,
            "M": self.M,
            "seed": int(self.plan.seed),
            "class0_calibration_fraction": self.plan.class0_calibration_fraction,
            "vote_rule": "majority_tie_to_class0",
            "feature_names": list(self.feature_names),
            "members": [
                {"model": model.to_dict(), "threshold": thr.to_dict()} for model, thr in self.members
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "NPEnsemble":
        if d.get("format") != MODEL_FORMAT:
            raise InvalidArgumentError(f"not an npclass model file (format={d.get('format')!r})")
        if d.get("version") != MODEL_VERSION:
            raise InvalidArgumentError(f"unsupported model file version {d.get('version')!r}")
        plan = SplitPlan(
            M=int(d["M"]),
            class0_calibration_fraction=float(d["class0_calibration_fraction"]),
            seed=int(d["seed"]),
            alpha=float(d["alpha"]),
            delta=float(d["delta"]),
        )
        members = tuple(
            (model_from_dict(m["model"]), NPThreshold.from_dict(m["threshold"])) for m in d["members"]
        )
        if len(members) != plan.M:
            raise InvalidArgumentError("model file member count does not match M")
        return cls(members, plan, tuple(d.get("feature_names", ())))

    @classmethod
    def from_json(cls, text: str) -> "NPEnsemble":
        return cls.from_dict(json.loads(text))


def predict(ensemble: NPEnsemble, x) -> int:
    return ensemble.predict(x)


def _split_class0(train: LabeledDataset, plan: SplitPlan, i: int) -> tuple[np.ndarray, np.ndarray]:
    rng = derive_rng(plan.seed, i)
    idx0 = train.class_indices(0)
    perm = rng.permutation(idx0)
    n_cal = math.floor(plan.class0_calibration_fraction * idx0.size)
    return perm[n_cal:], perm[:n_cal]


def fit_member(train: LabeledDataset, base: Learner, plan: SplitPlan, i: int) -> tuple[ScoreModel, NPThreshold]:
    fit_idx0, cal_idx = _split_class0(train, plan, i)
    fit_idx = np.sort(np.concatenate([fit_idx0, train.class_indices(1)]))
    model = base(train.subset(fit_idx))
    cal_scores = model.score(train.features[cal_idx])
    return model, select_threshold(cal_scores, plan.alpha, plan.delta)


def fit_np(train: LabeledDataset, base: Learner, plan: SplitPlan) -> NPEnsemble:
    """Fit an NP classifier with type I error <= alpha w.p. >= 1 - delta per member.

    Raises InsufficientSampleError before any fitting if the calibration part
    of class 0 is smaller than the minimum sample size for (alpha, delta).
    """
    n0 = int(np.sum(train.labels == 0))
    n_cal = math.floor(plan.class0_calibration_fraction * n0)
    n_min = min_class0_size(plan.alpha, plan.delta)
    if n_cal < n_min:
        raise InsufficientSampleError(n_cal, n_min, plan.alpha, plan.delta)
    members = tuple(fit_member(train, base, plan, i) for i in range(plan.M))
    return NPEnsemble(members, plan, train.feature_names)


def split_bands(train: LabeledDataset, base: Learner, delta: float, plan: SplitPlan) -> list[NPROCBand]:
    """One single-split band per random split; both classes are split."""
    bands = []
    for i in range(plan.M):
        rng = derive_rng(plan.seed, i)
        leftout, fit = stratified_split_indices(train.labels, plan.class0_calibration_fraction, rng)
        fit_data = train.subset(fit)
        left = train.subset(leftout)
        model = base(fit_data)
        s0 = model.score(left.class_features(0))
        s1 = model.score(left.class_features(1))
        if s0.size == 0 or s1.size == 0:
            raise InvalidArgumentError(
                f"split {i} leaves {s0.size} class 0 and {s1.size} class 1 points out; need both nonempty"
            )
        bands.append(band_from_split(s0, s1, delta))
    return bands


def fit_band(
    train: LabeledDataset,
    base: Learner,
    delta: float,
    plan: SplitPlan,
    grid_size: int = DEFAULT_GRID_SIZE,
) -> NPROCBand:
    """NP-ROC band; with M > 1 the per-split curves are averaged on a grid."""
    bands = split_bands(train, base, delta, plan)
    if len(bands) == 1:
        return bands[0]
    return average_bands(bands, grid_size)


def majority_vote(votes: Sequence[int]) -> int:
    votes = list(votes)
    return int(2 * sum(votes) > len(votes))
