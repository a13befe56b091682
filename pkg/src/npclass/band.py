"""NP-ROC bands: type I error upper bounds against type II error bounds.

One split gives n vertical segments, one per left-out class 0 order
statistic t_k. Each segment sits at the horizontal position alpha_k, the
(1 - delta) upper bound on the type I error of ``score > t_k``, and spans
[1 - beta_U, 1 - beta_L], where beta_L/beta_U bound the conditional type II
error F_1(t_k) using the ranks of t_k among left-out class 1 scores.

Between two knots alpha_k < a < alpha_{k-1} a classifier with threshold
between t_{k-1} and t_k inherits beta_L from k-1 and beta_U from k, so the
lower curve holds the value of the knot to its left and the upper curve the
value of the knot to its right. Left of every knot the lower curve is 0;
right of every knot the upper curve is 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .betainc import betainc
from .errors import InvalidArgumentError
from .threshold import _check_count, _check_prob

SECTION_POINTS = 8  # interior points per round; each round shrinks the bracket 9x
SECTION_ROUNDS = 12  # 9**-12 < 4e-12, inside the 1e-10 target
DEFAULT_GRID_SIZE = 1000


class Scenario(str, Enum):
    INTERIOR = "interior"
    ABOVE_ALL_CLASS1 = "above_all_class1"
    BELOW_ALL_CLASS1 = "below_all_class1"


def _bisect(holds, size: int, *, want) -> np.ndarray:
    """Vectorized bracketing search on [0, 1] for a monotone predicate.

    Bisection generalized to several interior points per round, which are
    all evaluated in one call of ``holds``; for the short parameter vectors
    met here the call overhead, not the arithmetic, is the cost.

    ``holds(x)`` is evaluated element-wise on arrays of shape
    ``(SECTION_POINTS, size)``. With ``want="inf"`` the predicate must be
    false at 0 and true at 1 and the returned value is the upper bracket end
    (where it holds); with ``want="sup"`` it is true at 0, false at 1, and the
    lower bracket end is returned. A boolean array mixes the two per element
    (True for "inf").
    """
    if isinstance(want, str):
        want = want == "inf"
    inf = np.broadcast_to(np.asarray(want, dtype=bool), (size,))
    lo = np.zeros(size)
    hi = np.ones(size)
    frac = np.arange(SECTION_POINTS + 2)[:, None] / (SECTION_POINTS + 1.0)
    cols = np.arange(size)
    for _ in range(SECTION_ROUNDS):
        grid = lo + (hi - lo) * frac
        grid[-1] = hi
        # points on the target's far side from 0: the predicate equals "inf"
        above = holds(grid[1:-1]) == inf
        below = np.sum(~above, axis=0)
        lo, hi = grid[below, cols], grid[below + 1, cols]
    return np.where(inf, hi, lo)


@lru_cache(maxsize=1024)
def _alpha_bounds(n: int, delta: float) -> np.ndarray:
    k = np.arange(1, n + 1, dtype=float)
    # violation rate P[Bin(n, 1 - a) >= k] decreases in a
    out = _bisect(lambda a: betainc(k, n - k + 1.0, 1.0 - a) <= delta, n, want="inf")
    closed = 1.0 - delta ** (1.0 / n)
    if abs(out[-1] - closed) > 1e-9:
        raise ArithmeticError(
            f"bisection for k=n disagrees with closed form: {out[-1]!r} vs {closed!r}"
        )
    # closed form for k = n, nudged up by ulps if rounding pushes the tail past delta
    while (1.0 - closed) ** n > delta:
        closed = np.nextafter(closed, 1.0)
    out[-1] = closed
    out.setflags(write=False)
    return out


@lru_cache(maxsize=1024)
def _beta_bounds(m: int, delta: float) -> tuple[np.ndarray, np.ndarray]:
    r = np.arange(1, m + 1, dtype=float)
    # P[Bin(m, b) >= r] increases in b
    rr = np.concatenate([r, r])
    # both bounds bisected together: P[Bin(m, b) >= r] <= delta (sup) and
    # P[Bin(m, b) >= r] >= 1 - delta (inf)
    inf = np.repeat([False, True], m)

    def holds(b):
        t = betainc(rr, m - rr + 1.0, b)
        return np.where(inf, t >= 1.0 - delta, t <= delta)

    both = _bisect(holds, 2 * m, want=inf)
    lower, upper = both[:m].copy(), both[m:].copy()
    lower.setflags(write=False)
    upper.setflags(write=False)
    return lower, upper


def alpha_upper_bound(n: int, k: int, delta: float) -> float:
    """(1 - delta) upper bound on the type I error of ``score > T_(k)``.

    inf{a in [0, 1] : P[Bin(n, 1 - a) >= k] <= delta}.
    """
    _check_count("n", n)
    _check_count("k", k)
    if k > n:
        raise InvalidArgumentError(f"k must satisfy 1 <= k <= n, got k={k}, n={n}")
    _check_prob("delta", delta)
    return float(_alpha_bounds(int(n), float(delta))[k - 1])


def beta_lower_bound(m: int, r_lower: int, delta: float) -> float:
    """sup{b in [0, 1] : P[Bin(m, b) >= r_lower] <= delta}."""
    _check_count("m", m)
    _check_count("r_lower", r_lower)
    if r_lower > m:
        raise InvalidArgumentError(f"r_lower must be <= m, got {r_lower} > {m}")
    _check_prob("delta", delta)
    return float(_beta_bounds(int(m), float(delta))[0][r_lower - 1])


def beta_upper_bound(m: int, r_upper: int, delta: float) -> float:
    """inf{b in [0, 1] : P[Bin(m, b) >= r_upper] >= 1 - delta}."""
    _check_count("m", m)
    _check_count("r_upper", r_upper)
    if r_upper > m:
        raise InvalidArgumentError(f"r_upper must be <= m, got {r_upper} > {m}")
    _check_prob("delta", delta)
    return float(_beta_bounds(int(m), float(delta))[1][r_upper - 1])


def rank_bounds(
    class1_scores_sorted: Sequence[float], t: float
) -> tuple[int | None, int | None, Scenario]:
    """Ranks of threshold t among sorted class 1 scores (1-based).

    r_lower = max{r : T_(r) <= t}, r_upper = min{r : T_(r) >= t}; either is
    None when t lies outside the range of class 1 scores.
    """
    s = np.asarray(class1_scores_sorted, dtype=float)
    if s.size == 0:
        raise InvalidArgumentError("class 1 sample must be nonempty")
    if np.any(np.diff(s) < 0):
        raise InvalidArgumentError("class1_scores_sorted must be sorted ascending")
    if t > s[-1]:
        return s.size, None, Scenario.ABOVE_ALL_CLASS1
    if t < s[0]:
        return None, 1, Scenario.BELOW_ALL_CLASS1
    r_lower = int(np.searchsorted(s, t, side="right"))
    r_upper = int(np.searchsorted(s, t, side="left")) + 1
    return r_lower, r_upper, Scenario.INTERIOR


@dataclass(frozen=True)
class BandSegment:
    k: int
    threshold: float
    alpha_bound: float
    beta_lower: float
    beta_upper: float
    scenario: Scenario
    r_lower: int | None = None
    r_upper: int | None = None


@dataclass(frozen=True)
class BandGrid:
    alpha: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class NPROCBand:
    """An NP-ROC band, either from one split (segments) or averaged on a grid.

    ``lower`` and ``upper`` are curves of 1 - type II error bounds against the
    type I error upper bound alpha.
    """

    segments: tuple[BandSegment, ...] = ()
    n: int | None = None
    m: int | None = None
    delta: float | None = None
    grid: BandGrid | None = None
    n_bands: int = 1

    def curves(self, alphas) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate (lower, upper) at each alpha."""
        a = np.atleast_1d(np.asarray(alphas, dtype=float))
        if self.grid is not None:
            g = self.grid
            i = np.searchsorted(g.alpha, a, side="right") - 1
            j = np.searchsorted(g.alpha, a, side="left")
            lower = np.where(i >= 0, g.lower[np.clip(i, 0, None)], 0.0)
            upper = np.where(j < g.alpha.size, g.upper[np.clip(j, None, g.alpha.size - 1)], 1.0)
            return lower, upper
        if not self.segments:
            raise InvalidArgumentError("band has neither segments nor a grid")
        # knots ascending in alpha, i.e. k = n, n-1, ..., 1
        segs = self.segments[::-1]
        knots = np.array([s.alpha_bound for s in segs])
        low_vals = np.array([1.0 - s.beta_upper for s in segs])
        up_vals = np.array([1.0 - s.beta_lower for s in segs])
        i = np.searchsorted(knots, a, side="right") - 1
        j = np.searchsorted(knots, a, side="left")
        lower = np.where(i >= 0, low_vals[np.clip(i, 0, None)], 0.0)
        upper = np.where(j < knots.size, up_vals[np.clip(j, None, knots.size - 1)], 1.0)
        return lower, upper

    def knots(self) -> np.ndarray:
        return np.array([s.alpha_bound for s in self.segments])


def band_from_split(
    class0_leftout_scores: Sequence[float],
    class1_leftout_scores: Sequence[float],
    delta: float,
) -> NPROCBand:
    """Build the single-split band from left-out scores of both classes.

    Both score samples must come from points the scorer was not fitted on.
    """
    s0 = np.sort(np.asarray(class0_leftout_scores, dtype=float).ravel(), kind="stable")
    s1 = np.sort(np.asarray(class1_leftout_scores, dtype=float).ravel(), kind="stable")
    if s0.size == 0 or s1.size == 0:
        raise InvalidArgumentError("both left-out score samples must be nonempty")
    if not (np.all(np.isfinite(s0)) and np.all(np.isfinite(s1))):
        raise InvalidArgumentError("scores must be finite")
    _check_prob("delta", delta)
    n, m = int(s0.size), int(s1.size)
    alphas = _alpha_bounds(n, float(delta))
    b_low, b_up = _beta_bounds(m, float(delta))

    segments = []
    for k in range(1, n + 1):
        t = float(s0[k - 1])
        r_l, r_u, scenario = _ranks_sorted(s1, t)
        beta_l = 0.0 if r_l is None else float(b_low[r_l - 1])
        beta_u = 1.0 if r_u is None else float(b_up[r_u - 1])
        if beta_l > beta_u:
            # heavy ties among class 1 scores (or delta > 1/2) can cross the
            # one-sided bounds; widening to [min, max] keeps both valid
            beta_l, beta_u = beta_u, beta_l
        segments.append(
            BandSegment(
                k=k,
                threshold=t,
                alpha_bound=float(alphas[k - 1]),
                beta_lower=beta_l,
                beta_upper=beta_u,
                scenario=scenario,
                r_lower=r_l,
                r_upper=r_u,
            )
        )
    return NPROCBand(segments=tuple(segments), n=n, m=m, delta=float(delta))


def _ranks_sorted(s1: np.ndarray, t: float):
    # rank_bounds without re-validating the (already sorted) sample
    if t > s1[-1]:
        return s1.size, None, Scenario.ABOVE_ALL_CLASS1
    if t < s1[0]:
        return None, 1, Scenario.BELOW_ALL_CLASS1
    return (
        int(np.searchsorted(s1, t, side="right")),
        int(np.searchsorted(s1, t, side="left")) + 1,
        Scenario.INTERIOR,
    )


def evaluate_band(band: NPROCBand, alpha: float) -> tuple[float, float]:
    _check_prob("alpha", alpha, open_interval=False)
    lower, upper = band.curves([alpha])
    return float(lower[0]), float(upper[0])


def uniform_grid(grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    _check_count("grid_size", grid_size, minimum=2)
    return np.linspace(0.0, 1.0, grid_size)


def average_bands(bands: Iterable[NPROCBand], grid_size: int = DEFAULT_GRID_SIZE) -> NPROCBand:
    """Pointwise mean of the lower and upper curves on a uniform alpha grid."""
    bands = list(bands)
    if not bands:
        raise InvalidArgumentError("average_bands needs at least one band")
    grid = uniform_grid(grid_size)
    lowers, uppers = zip(*(b.curves(grid) for b in bands))
    lower = np.mean(np.vstack(lowers), axis=0)
    upper = np.mean(np.vstack(uppers), axis=0)
    first = bands[0]
    return NPROCBand(
        n=first.n,
        m=first.m,
        delta=first.delta,
        grid=BandGrid(alpha=grid, lower=lower, upper=upper),
        n_bands=sum(b.n_bands for b in bands),
    )


@dataclass(frozen=True)
class DominanceReport:
    """Alpha intervals (grid endpoints, inclusive) where one band's lower
    curve lies strictly above the other band's upper curve."""

    intervals_first_wins: list[tuple[float, float]] = field(default_factory=list)
    intervals_second_wins: list[tuple[float, float]] = field(default_factory=list)


def _runs(grid: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    out = []
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    for start, stop in zip(edges[::2], edges[1::2]):
        out.append((float(grid[start]), float(grid[stop - 1])))
    return out


def compare_bands(a: NPROCBand, b: NPROCBand, grid_size: int = DEFAULT_GRID_SIZE) -> DominanceReport:
    grid = uniform_grid(grid_size)
    la, ua = a.curves(grid)
    lb, ub = b.curves(grid)
    return DominanceReport(
        intervals_first_wins=_runs(grid, la > ub),
        intervals_second_wins=_runs(grid, lb > ua),
    )


def choose_alpha(band: NPROCBand, max_type2: float) -> float | None:
    """Smallest alpha whose type II upper bound (1 - lower curve) is <= max_type2.

    Candidates are the positive grid points of an averaged band, or the knots of a
    single-split band (the lower curve only changes at knots). Returns None
    when no candidate meets the target.
    """
    _check_prob("max_type2", max_type2, open_interval=False)
    if band.grid is not None:
        # alpha = 0 admits no classifier, so the grid origin is never returned
        candidates = band.grid.alpha[band.grid.alpha > 0]
    else:
        candidates = np.sort(band.knots())
    lower, _ = band.curves(candidates)
    ok = np.flatnonzero(1.0 - lower <= max_type2)
    if ok.size == 0:
        return None
    return float(candidates[ok[0]])


def classifier_at_alpha(band: NPROCBand, alpha: float) -> BandSegment | None:
    """The order statistic classifier read off the band at horizontal position alpha.

    This is the smallest k whose type I error bound is at most alpha, i.e. the
    segment that sets the lower curve at alpha.
    """
    if not band.segments:
        raise InvalidArgumentError("a single-split band is needed to recover a classifier")
    for seg in band.segments:
        if seg.alpha_bound <= alpha:
            return seg
    return None


def write_band_csv(path, band: NPROCBand, grid_size: int = DEFAULT_GRID_SIZE) -> None:
    if band.grid is not None:
        alphas = band.grid.alpha
        lower, upper = band.grid.lower, band.grid.upper
    else:
        alphas = uniform_grid(grid_size)
        lower, upper = band.curves(alphas)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "lower", "upper"])
        for a, lo, up in zip(alphas, lower, upper):
            w.writerow([f"{a:.10g}", f"{lo:.10g}", f"{up:.10g}"])


def read_band_csv(path) -> NPROCBand:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise InvalidArgumentError(f"{path}: band file has no rows")
    try:
        alpha = np.array([float(r["alpha"]) for r in rows])
        lower = np.array([float(r["lower"]) for r in rows])
        upper = np.array([float(r["upper"]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise InvalidArgumentError(f"{path}: expected columns alpha,lower,upper ({exc})") from exc
    if np.any(np.diff(alpha) <= 0):
        raise InvalidArgumentError(f"{path}: alpha column must be strictly increasing")
    return NPROCBand(grid=BandGrid(alpha=alpha, lower=lower, upper=upper))


def write_segments_csv(path, band: NPROCBand) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "threshold", "alpha_bound", "beta_lower", "beta_upper", "scenario"])
        for s in band.segments:
            w.writerow([
                s.k, f"{s.threshold:.10g}", f"{s.alpha_bound:.10g}",
                f"{s.beta_lower:.10g}", f"{s.beta_upper:.10g}", s.scenario.value,
            ])


def write_dominance_csv(path, report: DominanceReport, names=("first", "second")) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha_lo", "alpha_hi", "winner"])
        rows = [(lo, hi, names[0]) for lo, hi in report.intervals_first_wins]
        rows += [(lo, hi, names[1]) for lo, hi in report.intervals_second_wins]
        for lo, hi, who in sorted(rows):
            w.writerow([f"{lo:.10g}", f"{hi:.10g}", who])
