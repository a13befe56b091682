import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from npclass.band import (
    BandGrid,
    NPROCBand,
    Scenario,
    alpha_upper_bound,
    average_bands,
    band_from_split,
    beta_lower_bound,
    beta_upper_bound,
    choose_alpha,
    classifier_at_alpha,
    compare_bands,
    evaluate_band,
    rank_bounds,
    read_band_csv,
    uniform_grid,
    write_band_csv,
    write_dominance_csv,
)
from npclass.errors import InvalidArgumentError
from npclass.threshold import violation_rate

from conftest import direct_tail, oracle_alpha_bound, oracle_beta_lower, oracle_beta_upper

DELTAS = [0.01, 0.05, 0.1, 0.2, 0.3]


def constant_band(lower, upper, grid_size=11):
    g = uniform_grid(grid_size)
    return NPROCBand(grid=BandGrid(g, np.full(g.size, lower), np.full(g.size, upper)))


class TestAlphaUpperBound:
    @pytest.mark.parametrize("delta", DELTAS)
    @pytest.mark.parametrize("n", [1, 2, 5, 13, 30])
    def test_matches_grid_search(self, n, delta):
        for k in range(1, n + 1):
            assert alpha_upper_bound(n, k, delta) == pytest.approx(oracle_alpha_bound(n, k, delta), abs=1e-8)

    @pytest.mark.parametrize("n", [1, 2, 10, 59, 500])
    @pytest.mark.parametrize("delta", DELTAS)
    def test_closed_form_at_k_equal_n(self, n, delta):
        assert alpha_upper_bound(n, n, delta) == pytest.approx(1 - delta ** (1 / n), abs=1e-8)

    def test_examples(self):
        assert alpha_upper_bound(1, 1, 0.5) == pytest.approx(0.5, abs=1e-10)
        assert alpha_upper_bound(59, 59, 0.05) == pytest.approx(0.049507609888227, abs=1e-10)

    @pytest.mark.parametrize("n,k,delta", [(40, 3, 0.1), (200, 190, 0.05), (25, 25, 0.2)])
    def test_inversion(self, n, k, delta):
        a = alpha_upper_bound(n, k, delta)
        assert violation_rate(n, k, a) <= delta
        assert violation_rate(n, k, a - 1e-6) > delta

    @given(st.integers(2, 400), st.floats(0.01, 0.4))
    def test_strictly_decreasing_in_k(self, n, delta):
        a = [alpha_upper_bound(n, k, delta) for k in range(1, n + 1)]
        assert all(x > y for x, y in zip(a, a[1:]))

    @pytest.mark.parametrize("n,k,delta", [(3, 0, 0.1), (3, 4, 0.1), (3, 1, 0.0), (3, 1, 1.0)])
    def test_rejects_invalid(self, n, k, delta):
        with pytest.raises(InvalidArgumentError):
            alpha_upper_bound(n, k, delta)


class TestBetaBounds:
    @pytest.mark.parametrize("delta", DELTAS)
    @pytest.mark.parametrize("m", [1, 2, 6, 19, 30])
    def test_lower_matches_grid_search(self, m, delta):
        for r in range(1, m + 1):
            assert beta_lower_bound(m, r, delta) == pytest.approx(oracle_beta_lower(m, r, delta), abs=1e-8)

    @pytest.mark.parametrize("delta", DELTAS)
    @pytest.mark.parametrize("m", [1, 2, 6, 19, 30])
    def test_upper_matches_grid_search(self, m, delta):
        for r in range(1, m + 1):
            assert beta_upper_bound(m, r, delta) == pytest.approx(oracle_beta_upper(m, r, delta), abs=1e-8)

    def test_closed_forms(self):
        assert beta_lower_bound(1, 1, 0.5) == pytest.approx(0.5, abs=1e-10)
        assert beta_lower_bound(2, 2, 0.25) == pytest.approx(0.5, abs=1e-10)
        assert beta_upper_bound(1, 1, 0.5) == pytest.approx(0.5, abs=1e-10)
        assert beta_upper_bound(2, 1, 0.19) == pytest.approx(1 - math.sqrt(0.19), abs=1e-10)

    def test_frozen_oracle_values(self):
        # nested grid search over direct 14-term tail sums
        assert beta_lower_bound(20, 7, 0.1) == pytest.approx(0.20666403328284663, abs=1e-8)
        assert beta_upper_bound(20, 14, 0.1) == pytest.approx(0.7933359667171533, abs=1e-8)

    @given(st.integers(1, 300), st.data(), st.floats(0.01, 0.45))
    def test_inversion(self, m, data, delta):
        r = data.draw(st.integers(1, m))
        lo = beta_lower_bound(m, r, delta)
        up = beta_upper_bound(m, r, delta)
        assert lo <= up
        assert direct_tail(m, r, lo)[0] <= delta + 1e-12
        assert direct_tail(m, r, up)[0] >= 1 - delta - 1e-12

    @given(st.integers(1, 200), st.data(), st.floats(0.01, 0.5))
    def test_symmetry(self, m, data, delta):
        # P[Bin(m, b) >= r] = 1 - P[Bin(m, 1 - b) >= m - r + 1]
        r = data.draw(st.integers(1, m))
        assert beta_upper_bound(m, r, delta) == pytest.approx(1 - beta_lower_bound(m, m - r + 1, delta), abs=1e-9)


class TestRankBounds:
    @pytest.mark.parametrize(
        "t,expected",
        [
            (2.0, (2, 2, Scenario.INTERIOR)),
            (2.5, (2, 3, Scenario.INTERIOR)),
            (4.0, (3, None, Scenario.ABOVE_ALL_CLASS1)),
            (0.5, (None, 1, Scenario.BELOW_ALL_CLASS1)),
            (1.0, (1, 1, Scenario.INTERIOR)),
            (3.0, (3, 3, Scenario.INTERIOR)),
        ],
    )
    def test_examples(self, t, expected):
        assert rank_bounds([1.0, 2.0, 3.0], t) == expected

    def test_ties_follow_definitions(self):
        # r_L = max{r: T_(r) <= t}, r_U = min{r: T_(r) >= t}
        assert rank_bounds([1.0, 2.0, 2.0, 2.0, 3.0], 2.0) == (4, 2, Scenario.INTERIOR)

    def test_requires_sorted(self):
        with pytest.raises(InvalidArgumentError):
            rank_bounds([3.0, 1.0], 2.0)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.floats(-120, 120))
    def test_against_brute_force(self, scores, t):
        s = sorted(scores)
        r_l, r_u, _ = rank_bounds(s, t)
        below = [r for r in range(1, len(s) + 1) if s[r - 1] <= t]
        above = [r for r in range(1, len(s) + 1) if s[r - 1] >= t]
        assert r_l == (max(below) if below else None)
        assert r_u == (min(above) if above else None)


class TestBandFromSplit:
    def test_composed_example(self):
        band = band_from_split([1.0, 3.0], [2.0, 4.0], 0.3)
        s1, s2 = band.segments
        assert (s1.k, s1.threshold, s1.scenario, s1.r_upper, s1.beta_lower) == (1, 1.0, Scenario.BELOW_ALL_CLASS1, 1, 0.0)
        assert (s2.scenario, s2.r_lower, s2.r_upper) == (Scenario.INTERIOR, 1, 2)
        # closed forms: sqrt(0.7), 1 - sqrt(0.3), 1 - sqrt(0.7)
        assert s1.alpha_bound == pytest.approx(math.sqrt(0.7), abs=1e-9)
        assert s1.beta_upper == pytest.approx(1 - math.sqrt(0.3), abs=1e-9)
        assert s2.alpha_bound == pytest.approx(1 - math.sqrt(0.3), abs=1e-9)
        assert s2.beta_lower == pytest.approx(1 - math.sqrt(0.7), abs=1e-9)
        assert s2.beta_upper == pytest.approx(math.sqrt(0.7), abs=1e-9)

    def test_class1_below_everything(self):
        band = band_from_split(np.arange(10.0, 20.0), np.arange(0.0, 5.0), 0.1)
        assert all(s.scenario is Scenario.ABOVE_ALL_CLASS1 and s.beta_upper == 1.0 for s in band.segments)
        lower, _ = band.curves(uniform_grid(101))
        assert np.all(lower == 0.0)

    def test_single_points(self):
        (seg,) = band_from_split([0.7], [0.7], 0.5).segments
        assert seg.alpha_bound == pytest.approx(0.5, abs=1e-10)
        assert (seg.r_lower, seg.r_upper, seg.scenario) == (1, 1, Scenario.INTERIOR)
        assert seg.beta_lower == pytest.approx(0.5, abs=1e-9)
        assert seg.beta_upper == pytest.approx(0.5, abs=1e-9)

    @given(
        st.lists(st.floats(-5, 5), min_size=1, max_size=40),
        st.lists(st.floats(-5, 5), min_size=1, max_size=40),
        st.floats(0.01, 0.45),
    )
    def test_segment_invariants(self, s0, s1, delta):
        band = band_from_split(s0, s1, delta)
        for seg in band.segments:
            assert 0.0 <= seg.beta_lower <= seg.beta_upper <= 1.0
            if seg.scenario is Scenario.ABOVE_ALL_CLASS1:
                assert seg.beta_upper == 1.0
            if seg.scenario is Scenario.BELOW_ALL_CLASS1:
                assert seg.beta_lower == 0.0
        lower, upper = band.curves(uniform_grid(200))
        assert np.all(lower <= upper + 1e-12)

    def test_rejects_empty(self):
        with pytest.raises(InvalidArgumentError):
            band_from_split([], [1.0], 0.1)


class TestEvaluateBand:
    band = band_from_split([1.0, 3.0], [2.0, 4.0], 0.3)

    def test_at_knot(self):
        s2 = self.band.segments[1]
        lo, up = evaluate_band(self.band, s2.alpha_bound)
        assert (lo, up) == (1 - s2.beta_upper, 1 - s2.beta_lower)

    def test_between_knots(self):
        # between alpha_2 and alpha_1: lower from k = 2, upper from k = 1
        s1, s2 = self.band.segments
        lo, up = evaluate_band(self.band, 0.6)
        assert lo == 1 - s2.beta_upper
        assert up == 1 - s1.beta_lower

    def test_outside_knots(self):
        s1, s2 = self.band.segments
        assert evaluate_band(self.band, 0.0) == (0.0, 1 - s2.beta_lower)
        assert evaluate_band(self.band, 0.95) == (1 - s1.beta_upper, 1.0)

    def test_rejects_alpha_outside_unit_interval(self):
        with pytest.raises(InvalidArgumentError):
            evaluate_band(self.band, 1.5)


class TestAverageAndCompare:
    def test_identical_bands(self):
        b = band_from_split(np.arange(30.0), np.arange(10.0, 40.0), 0.1)
        avg = average_bands([b, b, b], 101)
        lo, up = b.curves(uniform_grid(101))
        np.testing.assert_allclose(avg.grid.lower, lo, atol=1e-15)
        np.testing.assert_allclose(avg.grid.upper, up, atol=1e-15)

    def test_constant_means(self):
        avg = average_bands([constant_band(0.2, 0.4), constant_band(0.4, 0.8)], 11)
        np.testing.assert_allclose(avg.grid.lower, 0.3)
        np.testing.assert_allclose(avg.grid.upper, 0.6)

    def test_averaged_band_ordered(self):
        rng = np.random.default_rng(5)
        bands = [band_from_split(rng.normal(size=200), rng.normal(2, 1, 200), 0.1) for _ in range(11)]
        avg = average_bands(bands)
        assert np.all(avg.grid.lower <= avg.grid.upper + 1e-12)
        assert avg.n_bands == 11

    def test_separated_constants(self):
        rep = compare_bands(constant_band(0.6, 0.8), constant_band(0.2, 0.4), 11)
        assert rep.intervals_first_wins == [(0.0, 1.0)]
        assert rep.intervals_second_wins == []

    def test_self_comparison_empty(self):
        b = band_from_split(np.arange(30.0), np.arange(10.0, 40.0), 0.1)
        rep = compare_bands(b, b)
        assert rep.intervals_first_wins == [] and rep.intervals_second_wins == []

    def test_dominance_csv(self, tmp_path):
        rep = compare_bands(constant_band(0.2, 0.4), constant_band(0.6, 0.8), 11)
        write_dominance_csv(tmp_path / "d.csv", rep, ("a", "b"))
        assert (tmp_path / "d.csv").read_text() == "alpha_lo,alpha_hi,winner\n0,1,b\n"


class TestChooseAlpha:
    def test_perfect_lower_curve(self):
        assert choose_alpha(constant_band(1.0, 1.0, 11), 0.5) == pytest.approx(0.1)

    def test_unattainable(self):
        assert choose_alpha(constant_band(0.0, 1.0), 0.5) is None

    def test_segment_band_uses_knots(self):
        band = band_from_split(np.arange(100.0), np.arange(50.0, 150.0), 0.1)
        a = choose_alpha(band, 0.5)
        lo, _ = band.curves([a])
        assert 1 - lo[0] <= 0.5
        smaller = band.knots()[band.knots() < a]
        if smaller.size:
            assert np.all(1 - band.curves(smaller)[0] > 0.5)

    def test_classifier_at_alpha(self):
        band = band_from_split(np.arange(100.0), np.arange(50.0, 150.0), 0.1)
        seg = classifier_at_alpha(band, 0.05)
        assert seg.alpha_bound <= 0.05
        assert band.segments[seg.k - 2].alpha_bound > 0.05


class TestBandCsv:
    def test_round_trip(self, tmp_path):
        b = band_from_split(np.arange(30.0), np.arange(10.0, 40.0), 0.1)
        write_band_csv(tmp_path / "b.csv", b, 101)
        back = read_band_csv(tmp_path / "b.csv")
        lo, up = b.curves(uniform_grid(101))
        np.testing.assert_allclose(back.grid.lower, lo, atol=1e-9)
        np.testing.assert_allclose(back.grid.upper, up, atol=1e-9)

    def test_bad_header(self, tmp_path):
        (tmp_path / "b.csv").write_text("a,b\n1,2\n")
        with pytest.raises(InvalidArgumentError):
            read_band_csv(tmp_path / "b.csv")
