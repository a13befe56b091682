"""Order-statistic thresholds with high-probability type I error control.

Given n scores of class 0 points that the scorer never saw, the classifier
``score > T_(k)`` (T_(k) the k-th smallest left-out score) has population
type I error above ``alpha`` with probability at most

    v(k) = sum_{j=k}^{n} C(n, j) (1 - alpha)^j alpha^(n - j)
         = P[Bin(n, 1 - alpha) >= k],

whatever the score distribution. The calibrated order is the smallest k with
v(k) <= delta. Tail probabilities are evaluated through the regularized
incomplete beta function, never by summing pmf terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .betainc import betainc
from .errors import InsufficientSampleError, InvalidArgumentError, TooFewPointsError


def _check_prob(name: str, value: float, *, open_interval: bool = True) -> None:
    if not isinstance(value, (int, float, np.floating, np.integer)) or math.isnan(value):
        raise InvalidArgumentError(f"{name} must be a real number, got {value!r}")
    if open_interval and not 0.0 < value < 1.0:
        raise InvalidArgumentError(f"{name} must lie in (0, 1), got {value!r}")
    if not open_interval and not 0.0 <= value <= 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value!r}")


def _check_count(name: str, value: int, minimum: int = 1) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be >= {minimum}, got {value}")


@dataclass(frozen=True)
class ViolationParams:
    n: int
    alpha: float
    delta: float

    def __post_init__(self):
        _check_count("n", self.n)
        _check_prob("alpha", self.alpha)
        _check_prob("delta", self.delta)


@dataclass(frozen=True)
class NPThreshold:
    """Result of calibrating a threshold on left-out class 0 scores.

    The induced classifier predicts class 1 iff ``score > threshold``.
    """

    k_star: int
    threshold: float
    n: int
    alpha: float
    delta: float
    violation_bound: float

    def predict(self, scores) -> np.ndarray:
        return (np.asarray(scores, dtype=float) > self.threshold).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "k_star": int(self.k_star),
            "threshold": float(self.threshold),
            "n": int(self.n),
            "alpha": float(self.alpha),
            "delta": float(self.delta),
            "violation_bound": float(self.violation_bound),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NPThreshold":
        return cls(
            k_star=int(d["k_star"]),
            threshold=float(d["threshold"]),
            n=int(d["n"]),
            alpha=float(d["alpha"]),
            delta=float(d["delta"]),
            violation_bound=float(d["violation_bound"]),
        )


def binomial_tail(n: int, k: int, p: float) -> float:
    """P[Bin(n, p) >= k] via I_p(k, n - k + 1)."""
    _check_count("n", n, minimum=0)
    _check_count("k", k, minimum=0)
    if k > n:
        raise InvalidArgumentError(f"k must satisfy 0 <= k <= n, got k={k}, n={n}")
    _check_prob("p", p, open_interval=False)
    if k == 0:
        return 1.0
    if k == n:
        # exact power; keeps boundary cases such as (1/2)^1 <= 1/2 exact
        return p**n
    return betainc(k, n - k + 1, p)


def binomial_tail_array(n: int, k, p) -> np.ndarray:
    """Vectorized ``binomial_tail`` over orders ``k`` (all >= 1) and/or ``p``."""
    k = np.asarray(k, dtype=float)
    return betainc(k, n - k + 1.0, p)


def violation_rate(n: int, k: int, alpha: float) -> float:
    """Upper bound v(k) on P[type I error of ``score > T_(k)`` exceeds alpha]."""
    ViolationParams(n, alpha, 0.5)
    _check_count("k", k)
    if k > n:
        raise InvalidArgumentError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
    return binomial_tail(n, k, 1.0 - alpha)


@lru_cache(maxsize=4096)
def min_class0_size(alpha: float, delta: float) -> int:
    """Smallest n for which some order statistic reaches v(k) <= delta.

    Only k = n can work at the boundary, and v(n) = (1 - alpha)^n, so this is
    ceil(log delta / log(1 - alpha)); the rounded value is then checked
    against the exact tail in both directions.
    """
    _check_prob("alpha", alpha)
    _check_prob("delta", delta)
    n = max(1, math.ceil(math.log(delta) / math.log1p(-alpha)))
    while violation_rate(n, n, alpha) > delta:
        n += 1
    while n > 1 and violation_rate(n - 1, n - 1, alpha) <= delta:
        n -= 1
    return n


@lru_cache(maxsize=65536)
def min_order_index(n: int, alpha: float, delta: float) -> int:
    """k* = min{k in 1..n : v(k) <= delta}, found by bisection on k.

    Raises InsufficientSampleError when even k = n fails.
    """
    ViolationParams(n, alpha, delta)
    if violation_rate(n, n, alpha) > delta:
        raise InsufficientSampleError(n, min_class0_size(alpha, delta), alpha, delta)
    lo, hi = 1, n  # v(hi) <= delta always holds
    while lo < hi:
        mid = (lo + hi) // 2
        if violation_rate(n, mid, alpha) <= delta:
            hi = mid
        else:
            lo = mid + 1
    return lo


def select_threshold(class0_scores: Sequence[float], alpha: float, delta: float) -> NPThreshold:
    """Calibrate the NP threshold on scores of left-out class 0 points.

    The scores must come from class 0 observations that were not used to fit
    the scoring function; that independence is what the guarantee rests on.
    Ties are kept: k* indexes the sorted multiset.
    """
    scores = np.asarray(class0_scores, dtype=float).ravel()
    if scores.size == 0:
        raise InvalidArgumentError("class0_scores must be nonempty")
    if not np.all(np.isfinite(scores)):
        raise InvalidArgumentError("class0_scores must be finite")
    n = int(scores.size)
    k = min_order_index(n, float(alpha), float(delta))
    ordered = np.sort(scores, kind="stable")
    return NPThreshold(
        k_star=k,
        threshold=float(ordered[k - 1]),
        n=n,
        alpha=float(alpha),
        delta=float(delta),
        violation_bound=violation_rate(n, k, float(alpha)),
    )


def naive_threshold(class0_scores: Sequence[float], alpha: float) -> float:
    """Smallest observed score c with empirical type I error #{s > c}/n <= alpha.

    Baseline only: carries no guarantee on the population type I error.
    """
    scores = np.sort(np.asarray(class0_scores, dtype=float).ravel())
    if scores.size == 0:
        raise InvalidArgumentError("class0_scores must be nonempty")
    _check_prob("alpha", alpha, open_interval=False)
    n = scores.size
    exceed = n - np.searchsorted(scores, scores, side="right")
    ok = exceed / n <= alpha
    return float(scores[np.argmax(ok)])


def cv_threshold(
    class0_scores: Sequence[float], alpha: float, folds: int = 5, seed=0
) -> float:
    """Smallest observed score whose cross-validated type I error is <= alpha.

    Class 0 scores are shuffled into ``folds`` near-equal folds; the CV error
    of a candidate c is the mean over folds of the fraction of fold scores
    above c. Baseline only.
    """
    scores = np.asarray(class0_scores, dtype=float).ravel()
    _check_count("folds", folds, minimum=2)
    _check_prob("alpha", alpha, open_interval=False)
    n = scores.size
    if n < folds:
        raise TooFewPointsError(f"cv_threshold needs at least folds={folds} scores, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    candidates = np.unique(scores)
    cv_error = np.zeros(candidates.size)
    for fold in np.array_split(perm, folds):
        fold_scores = np.sort(scores[fold])
        above = fold_scores.size - np.searchsorted(fold_scores, candidates, side="right")
        cv_error += above / fold_scores.size
    cv_error /= folds
    # tolerate summation rounding when alpha sits exactly on an attainable value
    ok = cv_error <= alpha + 1e-12
    return float(candidates[np.argmax(ok)])
