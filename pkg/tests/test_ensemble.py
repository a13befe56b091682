from functools import partial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from npclass.data import SIM1_SPEC, LabeledDataset, simulate, simulate_s2
from npclass.ensemble import NPEnsemble, SplitPlan, fit_band, fit_member, fit_np, majority_vote, predict
from npclass.errors import InsufficientSampleError, InvalidArgumentError
from npclass.models import IdentityScorer, fit_identity, fit_lda
from npclass.threshold import NPThreshold, min_order_index

identity = partial(fit_identity, feature_index=0)


@pytest.fixture(scope="module")
def sim1():
    return simulate(SIM1_SPEC, 1000, 42)


def stub_ensemble(thresholds):
    members = tuple(
        (IdentityScorer(0, 1), NPThreshold(1, t, 100, 0.05, 0.05, 0.01)) for t in thresholds
    )
    return NPEnsemble(members, SplitPlan(M=len(members)))


class TestSplitPlan:
    @pytest.mark.parametrize(
        "kwargs",
        [{"M": 0}, {"M": 2.5}, {"class0_calibration_fraction": 1.0}, {"alpha": 0.0}, {"delta": 1.2}],
    )
    def test_validation(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            SplitPlan(**kwargs)


class TestFitNP:
    def test_single_split_consistent_with_threshold_module(self, sim1):
        ens = fit_np(sim1, identity, SplitPlan(M=1, seed=3))
        (_, thr), = ens.members
        n0 = int(np.sum(sim1.labels == 0))
        assert thr.n == n0 // 2
        assert thr.k_star == min_order_index(thr.n, 0.05, 0.05)

    def test_calibration_scores_left_out(self, sim1):
        plan = SplitPlan(M=1, seed=3)
        model, thr = fit_member(sim1, fit_lda, plan, 0)
        # recompute from the documented split to confirm the threshold source
        from npclass.ensemble import _split_class0

        fit_idx0, cal_idx = _split_class0(sim1, plan, 0)
        assert np.intersect1d(fit_idx0, cal_idx).size == 0
        cal = np.sort(model.score(sim1.features[cal_idx]))
        assert thr.threshold == cal[thr.k_star - 1]

    def test_deterministic(self, sim1):
        plan = SplitPlan(M=5, seed=11)
        assert fit_np(sim1, fit_lda, plan).to_json() == fit_np(sim1, fit_lda, plan).to_json()

    def test_members_are_nested_prefixes(self, sim1):
        big = fit_np(sim1, fit_lda, SplitPlan(M=5, seed=2))
        small = fit_np(sim1, fit_lda, SplitPlan(M=3, seed=2))
        assert big.members[:3] == small.members

    def test_seed_changes_splits(self, sim1):
        a = fit_np(sim1, identity, SplitPlan(M=1, seed=1))
        b = fit_np(sim1, identity, SplitPlan(M=1, seed=2))
        assert a.members[0][1].threshold != b.members[0][1].threshold

    def test_insufficient_sample(self):
        small = simulate(SIM1_SPEC, 100, 0)
        with pytest.raises(InsufficientSampleError) as info:
            fit_np(small, identity, SplitPlan())
        assert info.value.n_min == 59


class TestVoting:
    def test_m1_matches_member(self):
        ens = stub_ensemble([0.5])
        np.testing.assert_array_equal(ens.predict_batch([[0.4], [0.5], [0.6]]), [0, 0, 1])

    def test_majority(self):
        ens = stub_ensemble([0.0, 1.0, 2.0])
        np.testing.assert_array_equal(ens.votes([[0.5], [1.5], [2.5]]), [1, 2, 3])
        np.testing.assert_array_equal(ens.predict_batch([[0.5], [1.5], [2.5]]), [0, 1, 1])

    def test_even_tie_goes_to_class0(self):
        ens = stub_ensemble([0.0, 1.0])
        assert predict(ens, [0.5]) == 0
        assert majority_vote([1, 0]) == 0
        assert majority_vote([1, 1, 0]) == 1

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=30))
    def test_majority_vote_rule(self, votes):
        assert majority_vote(votes) == int(sum(votes) > len(votes) / 2)


class TestSerialization:
    def test_json_round_trip(self, sim1):
        ens = fit_np(sim1, fit_lda, SplitPlan(M=3, seed=5))
        back = NPEnsemble.from_json(ens.to_json())
        assert back == ens
        assert back.to_json() == ens.to_json()
        np.testing.assert_array_equal(back.predict_batch(sim1.features), ens.predict_batch(sim1.features))

    def test_rejects_foreign_format(self):
        with pytest.raises(InvalidArgumentError):
            NPEnsemble.from_dict({"format": "other"})


class TestBands:
    def test_single_split_band(self, sim1):
        band = fit_band(sim1, identity, 0.1, SplitPlan(M=1, seed=0))
        assert band.segments and band.grid is None
        assert band.n == int(np.sum(sim1.labels == 0)) // 2

    def test_averaged_band(self, sim1):
        band = fit_band(sim1, identity, 0.1, SplitPlan(M=4, seed=0), grid_size=201)
        assert band.grid is not None and band.n_bands == 4
        assert np.all(band.grid.lower <= band.grid.upper + 1e-12)

    def test_needs_both_classes_left_out(self):
        d = LabeledDataset(np.arange(10.0), [0] * 9 + [1])
        with pytest.raises(InvalidArgumentError):
            fit_band(d, identity, 0.1, SplitPlan(M=1))


class TestGuaranteeEndToEnd:
    def test_violation_rate_lda_model(self):
        # population type I error of each fitted LDA classifier on a large test draw
        test0 = simulate_s2("lda_model", 200_000, 99).class_features(0)
        viol = []
        for r in range(150):
            d = simulate_s2("lda_model", 600, 1000 + r)
            ens = fit_np(d, fit_lda, SplitPlan(M=1, seed=r))
            viol.append(np.mean(ens.predict_batch(test0)) > 0.05)
        assert np.mean(viol) <= 0.05 + 3 * np.sqrt(0.05 * 0.95 / 150)
