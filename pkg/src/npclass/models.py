"""Scoring functions: fitted models mapping features to a real score.

Higher score means more class-1-like. Only the ranking of scores matters to
the threshold calibration downstream, so monotone links are dropped: LDA and
logistic regression expose their affine predictor, naive Bayes its log
posterior odds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .data import LabeledDataset
from .errors import InvalidArgumentError, UnfitError

LDA_RIDGE = 1e-6
NB_VAR_FLOOR = 1e-12
LOGISTIC_MAX_ITER = 100
LOGISTIC_TOL = 1e-8

EXTERNAL_WARNING = (
    "external scores are used as-is; the NP guarantee holds only if the class 0 "
    "scores used for calibration come from points the scorer was not trained on"
)


def _fsum_mean(A: np.ndarray) -> np.ndarray:
    # exactly rounded column sums, so moments do not depend on row order
    return np.array([math.fsum(col) for col in A.T]) / A.shape[0]


def _fsum_cross(C: np.ndarray) -> np.ndarray:
    d = C.shape[1]
    out = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            out[i, j] = out[j, i] = math.fsum(C[:, i] * C[:, j])
    return out


def _check_features(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :] if n_features > 1 or X.size == 1 else X[:, None]
    if X.ndim != 2 or X.shape[1] != n_features:
        raise InvalidArgumentError(
            f"feature dimension mismatch: model expects {n_features} columns, got shape {X.shape}"
        )
    return X


@dataclass(frozen=True)
class IdentityScorer:
    """Uses one feature column as the score."""

    feature_index: int
    n_features: int
    kind: str = "identity"

    def score(self, X) -> np.ndarray:
        return _check_features(X, self.n_features)[:, self.feature_index].copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "feature_index": self.feature_index, "n_features": self.n_features}


@dataclass(frozen=True)
class ExternalScorer:
    """Scores produced elsewhere, supplied as the single feature column."""

    kind: str = "external"
    n_features: int = 1

    def score(self, X) -> np.ndarray:
        return _check_features(X, 1)[:, 0].copy()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "n_features": 1}


@dataclass(frozen=True)
class LinearScorer:
    """Affine score w.x + b (``kind`` is "lda" or "logistic")."""

    kind: str
    weights: tuple[float, ...]
    intercept: float
    iterations: int | None = None
    converged: bool | None = None

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def score(self, X) -> np.ndarray:
        X = _check_features(X, self.n_features)
        return X @ np.asarray(self.weights) + self.intercept

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "weights": [float(w) for w in self.weights], "intercept": float(self.intercept)}
        if self.iterations is not None:
            d["iterations"] = int(self.iterations)
            d["converged"] = bool(self.converged)
        return d


@dataclass(frozen=True)
class GaussianNBScorer:
    """Log posterior odds of class 1 under independent Gaussian features."""

    means0: tuple[float, ...]
    means1: tuple[float, ...]
    vars0: tuple[float, ...]
    vars1: tuple[float, ...]
    prior1: float
    kind: str = "gaussian_nb"

    @property
    def n_features(self) -> int:
        return len(self.means0)

    def score(self, X) -> np.ndarray:
        X = _check_features(X, self.n_features)
        m0, m1 = np.asarray(self.means0), np.asarray(self.means1)
        v0, v1 = np.asarray(self.vars0), np.asarray(self.vars1)
        ll1 = -0.5 * (np.log(2 * np.pi * v1) + (X - m1) ** 2 / v1)
        ll0 = -0.5 * (np.log(2 * np.pi * v0) + (X - m0) ** 2 / v0)
        return (ll1 - ll0).sum(axis=1) + math.log(self.prior1 / (1.0 - self.prior1))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "means0": list(map(float, self.means0)),
            "means1": list(map(float, self.means1)),
            "vars0": list(map(float, self.vars0)),
            "vars1": list(map(float, self.vars1)),
            "prior1": float(self.prior1),
        }


ScoreModel = IdentityScorer | ExternalScorer | LinearScorer | GaussianNBScorer


def model_from_dict(d: dict) -> ScoreModel:
    kind = d.get("kind")
    if kind == "identity":
        return IdentityScorer(int(d["feature_index"]), int(d["n_features"]))
    if kind == "external":
        return ExternalScorer()
    if kind in ("lda", "logistic"):
        return LinearScorer(
            kind,
            tuple(float(w) for w in d["weights"]),
            float(d["intercept"]),
            d.get("iterations"),
            d.get("converged"),
        )
    if kind == "gaussian_nb":
        return GaussianNBScorer(
            tuple(d["means0"]), tuple(d["means1"]), tuple(d["vars0"]), tuple(d["vars1"]), float(d["prior1"])
        )
    raise InvalidArgumentError(f"unknown model kind {kind!r}")


def score_batch(model: ScoreModel, features) -> np.ndarray:
    return model.score(features)


def _both_classes(train: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    X0, X1 = train.class_features(0), train.class_features(1)
    if X0.shape[0] == 0 or X1.shape[0] == 0:
        raise UnfitError(
            f"training data must contain both classes (class 0: {X0.shape[0]}, class 1: {X1.shape[0]})"
        )
    return X0, X1


def fit_identity(train: LabeledDataset, feature_index: int = 0) -> IdentityScorer:
    if not 0 <= feature_index < train.d:
        raise InvalidArgumentError(f"feature_index {feature_index} out of range for d={train.d}")
    return IdentityScorer(feature_index, train.d)


def fit_external(train: LabeledDataset) -> ExternalScorer:
    if train.d != 1:
        raise InvalidArgumentError("external scores must be a single column")
    warnings.warn(EXTERNAL_WARNING, stacklevel=2)
    return ExternalScorer()


def fit_lda(train: LabeledDataset) -> LinearScorer:
    """Fisher discriminant with pooled covariance.

    w = S^-1 (mu1 - mu0), b = -w.(mu0 + mu1)/2 + log(pi1/pi0). A singular
    pooled covariance gets a ridge of 1e-6 * trace(S)/d on the diagonal.
    """
    X0, X1 = _both_classes(train)
    n0, n1 = X0.shape[0], X1.shape[0]
    mu0, mu1 = _fsum_mean(X0), _fsum_mean(X1)
    dof = max(n0 + n1 - 2, 1)
    S = (_fsum_cross(X0 - mu0) + _fsum_cross(X1 - mu1)) / dof
    d = S.shape[0]
    if np.linalg.matrix_rank(S) < d or np.linalg.cond(S) > 1e12:
        scale = np.trace(S) / d if np.trace(S) > 0 else 1.0
        S = S + np.eye(d) * LDA_RIDGE * scale
    w = np.linalg.solve(S, mu1 - mu0)
    b = -w @ (mu0 + mu1) / 2.0 + math.log(n1 / n0)
    return LinearScorer("lda", tuple(float(v) for v in w), float(b))


def fit_gaussian_nb(train: LabeledDataset) -> GaussianNBScorer:
    X0, X1 = _both_classes(train)
    mu0, mu1 = _fsum_mean(X0), _fsum_mean(X1)
    var0 = _fsum_mean((X0 - mu0) ** 2)
    var1 = _fsum_mean((X1 - mu1) ** 2)
    var0 = np.maximum(var0, NB_VAR_FLOOR)
    var1 = np.maximum(var1, NB_VAR_FLOOR)
    prior1 = X1.shape[0] / train.n
    return GaussianNBScorer(
        tuple(map(float, mu0)), tuple(map(float, mu1)),
        tuple(map(float, var0)), tuple(map(float, var1)),
        float(prior1),
    )


def _loglik(Xd: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    eta = Xd @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(
    train: LabeledDataset, max_iter: int = LOGISTIC_MAX_ITER, tol: float = LOGISTIC_TOL
) -> LinearScorer:
    """Maximum likelihood logistic regression by iteratively reweighted least squares.

    Each Newton step solves (X'WX) step = X'(y - p) and is halved until the
    log-likelihood does not decrease. Stops when the largest coefficient
    change drops below ``tol`` or after ``max_iter`` steps; on (quasi-)
    separated data the coefficients keep growing and the cap ends the fit,
    which is harmless because only the score ranking is used.
    """
    _both_classes(train)
    X = train.features
    y = train.labels.astype(float)
    Xd = np.hstack([np.ones((X.shape[0], 1)), X])
    beta = np.zeros(Xd.shape[1])
    ll = _loglik(Xd, y, beta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = Xd @ beta
        p = 0.5 * (1.0 + np.tanh(0.5 * eta))
        w = p * (1.0 - p)
        grad = Xd.T @ (y - p)
        H = Xd.T @ (Xd * w[:, None])
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        for _ in range(50):
            new_ll = _loglik(Xd, y, beta + step)
            if new_ll >= ll - 1e-12 * abs(ll):
                break
            step = step / 2.0
        beta = beta + step
        ll = new_ll
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    return LinearScorer("logistic", tuple(map(float, beta[1:])), float(beta[0]), it, converged)


def logistic_gradient(model: LinearScorer, data: LabeledDataset) -> np.ndarray:
    """Gradient of the Bernoulli log-likelihood at (intercept, weights)."""
    Xd = np.hstack([np.ones((data.n, 1)), data.features])
    beta = np.concatenate([[model.intercept], model.weights])
    p = 1.0 / (1.0 + np.exp(-(Xd @ beta)))
    return Xd.T @ (data.labels - p)


LEARNERS: dict[str, Callable[[LabeledDataset], ScoreModel]] = {
    "identity": fit_identity,
    "lda": fit_lda,
    "gnb": fit_gaussian_nb,
    "logistic": fit_logistic,
    "external": fit_external,
}


@dataclass(frozen=True)
class ErrorReport:
    """Empirical type I/II errors; None when the test set lacks that class."""

    type1_hat: float | None
    type2_hat: float | None
    n0: int
    n1: int

    def to_dict(self) -> dict:
        return {"type1_hat": self.type1_hat, "type2_hat": self.type2_hat, "n0": self.n0, "n1": self.n1}


def evaluate_errors(predict: Callable[[np.ndarray], np.ndarray], test: LabeledDataset) -> ErrorReport:
    pred = np.asarray(predict(test.features)).astype(int).ravel()
    y = test.labels
    n0 = int(np.sum(y == 0))
    n1 = int(np.sum(y == 1))
    type1 = float(np.mean(pred[y == 0] == 1)) if n0 else None
    type2 = float(np.mean(pred[y == 1] == 0)) if n1 else None
    return ErrorReport(type1, type2, n0, n1)
