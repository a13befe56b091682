"""Monte Carlo reproductions of the Gaussian and ensemble simulations.

Population errors come from the analytic Gaussian formulas where the score
is a raw feature (sim1, s1, coverage), and from a large seeded test draw for
the three-feature ensemble study (s2). Every replicate draws from its own
derived random stream, so results do not depend on execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .band import NPROCBand, DominanceReport, choose_alpha, classifier_at_alpha, compare_bands
from .data import (
    S2_MODELS,
    SIM1_SPEC,
    derive_rng,
    gaussian_type1,
    gaussian_type2,
    sim2_spec,
    simulate,
    simulate_s2,
)
from .ensemble import SplitPlan, fit_band, fit_np
from .models import LEARNERS, fit_identity, fit_lda
from .threshold import cv_threshold, naive_threshold


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed for sub-stream ``keys`` of ``seed`` (for APIs taking ints)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def binomial_se(p: float, trials: int) -> float:
    return math.sqrt(p * (1.0 - p) / trials)


# --------------------------------------------------------------------- sim1


@dataclass
class Sim1Result:
    alpha: float
    delta: float
    type1: dict[str, np.ndarray]
    type2: dict[str, np.ndarray]

    def violation_rate(self, method: str) -> float:
        return float(np.mean(self.type1[method] > self.alpha))

    def summary_rows(self) -> list[dict]:
        return [
            {
                "method": m,
                "violation_rate": self.violation_rate(m),
                "type1_mean": float(np.mean(t)),
                "type2_mean": float(np.mean(self.type2[m])),
            }
            for m, t in self.type1.items()
        ]


def run_sim1(
    replicates: int = 1000,
    n: int = 1000,
    alpha: float = 0.05,
    delta: float = 0.05,
    seed: int = 0,
    folds: int = 5,
) -> Sim1Result:
    """Naive, cross-validated and NP thresholds on the identity score x."""
    type1 = {m: np.empty(replicates) for m in ("naive", "cv", "np")}
    type2 = {m: np.empty(replicates) for m in ("naive", "cv", "np")}
    for r in range(replicates):
        data = simulate(SIM1_SPEC, n, derive_rng(seed, r, 0))
        s0 = data.class_features(0)[:, 0]
        cuts = {
            "naive": naive_threshold(s0, alpha),
            "cv": cv_threshold(s0, alpha, folds, derive_rng(seed, r, 1)),
        }
        plan = SplitPlan(M=1, seed=derive_seed(seed, r, 2), alpha=alpha, delta=delta)
        ens = fit_np(data, fit_identity, plan)
        cuts["np"] = ens.members[0][1].threshold
        for m, c in cuts.items():
            type1[m][r] = gaussian_type1(c, 0.0, 1.0)
            type2[m][r] = gaussian_type2(c, 2.0, 1.0)
    return Sim1Result(alpha, delta, type1, type2)


# ----------------------------------------------------------------------- s1


@dataclass
class S1Result:
    alpha: float
    delta: float
    roc_type1: np.ndarray
    roc_empirical_type1: np.ndarray
    np_type1: np.ndarray
    np_empirical_type1: np.ndarray
    np_conservative: np.ndarray

    def roc_violation_rate(self) -> float:
        return float(np.mean(self.roc_type1 > self.alpha))

    def np_violation_rate(self) -> float:
        return float(np.mean(self.np_type1 > self.alpha))

    def conservative_rate(self) -> float:
        return float(np.mean(self.np_conservative))


def _roc_pick(train_scores: np.ndarray, test0_sorted: np.ndarray, alpha: float) -> tuple[float, float]:
    """Threshold among training points with the largest empirical type I error
    on the test set that is still <= alpha; the smallest such cut is taken
    (highest power among classifiers with that empirical type I error)."""
    n0 = test0_sorted.size
    cands = np.sort(train_scores)
    emp = (n0 - np.searchsorted(test0_sorted, cands, side="right")) / n0
    first = int(np.argmax(emp <= alpha))
    if emp[first] > alpha:
        return float("inf"), 0.0
    return float(cands[first]), float(emp[first])


def run_s1(
    replicates: int = 1000,
    n: int = 1000,
    alpha: float = 0.05,
    delta: float = 0.05,
    seed: int = 0,
) -> S1Result:
    """Classifiers read off an empirical ROC curve vs off an NP-ROC lower curve."""
    roc1 = np.empty(replicates)
    roc_emp = np.empty(replicates)
    np1 = np.empty(replicates)
    np_emp = np.empty(replicates)
    conservative = np.empty(replicates, dtype=bool)
    for r in range(replicates):
        train = simulate(SIM1_SPEC, n, derive_rng(seed, r, 0))
        test = simulate(SIM1_SPEC, n, derive_rng(seed, r, 1))
        test0 = np.sort(test.class_features(0)[:, 0])

        c, emp = _roc_pick(train.features[:, 0], test0, alpha)
        roc1[r] = gaussian_type1(c)
        roc_emp[r] = emp

        plan = SplitPlan(M=1, seed=derive_seed(seed, r, 2), alpha=alpha, delta=delta)
        band = fit_band(train, fit_identity, delta, plan)
        seg = classifier_at_alpha(band, alpha)
        t = seg.threshold if seg is not None else float("inf")
        np1[r] = gaussian_type1(t)
        np_emp[r] = float(np.mean(test0 > t))
        # band point (alpha_k, 1 - beta_U) below and right of the oracle ROC point
        conservative[r] = seg is not None and (
            seg.alpha_bound >= np1[r] and seg.beta_upper >= gaussian_type2(t, 2.0, 1.0)
        )
    return S1Result(alpha, delta, roc1, roc_emp, np1, np_emp, conservative)


# ----------------------------------------------------------------- coverage


@dataclass
class CoverageResult:
    delta: float
    trials: int
    positions: tuple[float, ...]
    covered: dict[float, np.ndarray]
    below: dict[float, np.ndarray]
    above: dict[float, np.ndarray]

    def frequency(self, q: float) -> float:
        return float(np.mean(self.covered[q]))


def run_coverage(
    trials: int = 2000,
    n: int = 1000,
    delta: float = 0.1,
    seed: int = 0,
    positions: tuple[float, ...] = (0.1, 0.5, 0.8, 0.95),
) -> CoverageResult:
    """Frequency of beta_L <= F_1(t_k) <= beta_U for fixed relative orders k/n."""
    covered = {q: np.empty(trials, dtype=bool) for q in positions}
    below = {q: np.empty(trials, dtype=bool) for q in positions}
    above = {q: np.empty(trials, dtype=bool) for q in positions}
    for r in range(trials):
        data = simulate(SIM1_SPEC, n, derive_rng(seed, r, 0))
        plan = SplitPlan(M=1, seed=derive_seed(seed, r, 1))
        band = fit_band(data, fit_identity, delta, plan)
        for q in positions:
            k = min(band.n, max(1, math.ceil(q * band.n)))
            seg = band.segments[k - 1]
            truth = gaussian_type2(seg.threshold, 2.0, 1.0)
            below[q][r] = truth < seg.beta_lower
            above[q][r] = truth > seg.beta_upper
            covered[q][r] = not (below[q][r] or above[q][r])
    return CoverageResult(delta, trials, tuple(positions), covered, below, above)


# --------------------------------------------------------------------- sim2


@dataclass
class Sim2Result:
    scale_convention: str
    band1: NPROCBand
    band2: NPROCBand
    dominance: DominanceReport
    chosen_alpha_method1: float | None
    max_type2: float


def run_sim2(
    n: int = 1000,
    M: int = 11,
    delta: float = 0.1,
    seed: int = 0,
    scale_convention: str = "variance",
    grid_size: int = 1000,
    max_type2: float = 0.5,
) -> Sim2Result:
    """LDA on x1 alone (method 1) vs LDA on x2 alone (method 2), same splits."""
    data = simulate(sim2_spec(scale_convention), n, derive_rng(seed, 0))
    plan = SplitPlan(M=M, seed=derive_seed(seed, 1))
    band1 = fit_band(data.select_features(["x1"]), fit_lda, delta, plan, grid_size)
    band2 = fit_band(data.select_features(["x2"]), fit_lda, delta, plan, grid_size)
    return Sim2Result(
        scale_convention,
        band1,
        band2,
        compare_bands(band1, band2, grid_size),
        choose_alpha(band1, max_type2),
        max_type2,
    )


# ----------------------------------------------------------------------- s2


@dataclass
class S2Cell:
    model: str
    learner: str
    M: int
    type1: np.ndarray
    type2: np.ndarray
    alpha: float

    @property
    def violation_rate(self) -> float:
        return float(np.mean(self.type1 > self.alpha))

    def row(self) -> dict:
        return {
            "model": self.model,
            "learner": self.learner,
            "M": self.M,
            "type1_mean": float(np.mean(self.type1)),
            "type1_sd": float(np.std(self.type1, ddof=1)) if self.type1.size > 1 else 0.0,
            "violation_rate": self.violation_rate,
            "type2_mean": float(np.mean(self.type2)),
            "type2_sd": float(np.std(self.type2, ddof=1)) if self.type2.size > 1 else 0.0,
        }


@dataclass
class S2Result:
    alpha: float
    delta: float
    replicates: int
    cells: list[S2Cell] = field(default_factory=list)

    def cell(self, model: str, learner: str, M: int) -> S2Cell:
        for c in self.cells:
            if (c.model, c.learner, c.M) == (model, learner, M):
                return c
        raise KeyError((model, learner, M))


def run_s2(
    replicates: int = 200,
    n: int = 1000,
    alpha: float = 0.05,
    delta: float = 0.05,
    Ms: tuple[int, ...] = (1, 5, 11),
    learners: tuple[str, ...] = ("logistic", "lda", "gnb"),
    models: tuple[str, ...] = S2_MODELS,
    test_size: int = 1_000_000,
    seed: int = 0,
) -> S2Result:
    """Ensembles of M split-wise NP classifiers on the two three-feature models.

    Member i of the M-split ensemble is the same for every M > i, so one fit
    of max(Ms) members per replicate serves all M values. Type I and II
    errors are measured on one large test draw per generative model.
    """
    Ms = tuple(sorted(Ms))
    max_m = Ms[-1]
    result = S2Result(alpha, delta, replicates)
    for mi, model in enumerate(models):
        test = simulate_s2(model, test_size, derive_rng(seed, mi, 0))
        X0t, X1t = test.class_features(0), test.class_features(1)
        t1 = {(lr, M): np.empty(replicates) for lr in learners for M in Ms}
        t2 = {(lr, M): np.empty(replicates) for lr in learners for M in Ms}
        for r in range(replicates):
            data = simulate_s2(model, n, derive_rng(seed, mi, 1, r))
            plan = SplitPlan(M=max_m, seed=derive_seed(seed, mi, 2, r), alpha=alpha, delta=delta)
            for lr in learners:
                ens = fit_np(data, LEARNERS[lr], plan)
                v0 = np.zeros(X0t.shape[0], dtype=np.int16)
                v1 = np.zeros(X1t.shape[0], dtype=np.int16)
                for i, (scorer, thr) in enumerate(ens.members, start=1):
                    v0 += scorer.score(X0t) > thr.threshold
                    v1 += scorer.score(X1t) > thr.threshold
                    if i in Ms:
                        t1[lr, i][r] = np.mean(2 * v0 > i)
                        t2[lr, i][r] = np.mean(2 * v1 <= i)
        for lr in learners:
            for M in Ms:
                result.cells.append(S2Cell(model, lr, M, t1[lr, M], t2[lr, M], alpha))
    return result
