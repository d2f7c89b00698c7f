from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from dstpll.errors import BudgetExceeded
from dstpll.evidence import LabelSet, belief, yager_combine
from dstpll.oracle import (
    CLUSTER_JITTER,
    DEFAULT_RISK_MODEL_ARGS,
    NoiseModel,
    case_probability,
    exact_binomial_check,
    expected_belief_cooccur,
    expected_belief_cooccur_exact,
    expected_belief_true,
    expected_belief_true_exact,
    risk_curve,
    sample_candidate_set,
    simulate_expected_belief,
)
from dstpll.pll import neighbor_bpa

FIG6 = NoiseModel(3, 1, 2, 0.4, 0.35, 0.25)


def enumerate_pairs(model):
    l = model.num_classes
    for bits in range(1, 1 << l):
        s = LabelSet(l, bits)
        for y in range(1, l + 1):
            yield s, y


class TestNoiseModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(2, 1, 2, 0.5, 0.3, 0.2)
        with pytest.raises(ValueError):
            NoiseModel(3, 1, 1, 0.5, 0.3, 0.2)
        with pytest.raises(ValueError):
            NoiseModel(3, 1, 2, 0.2, 0.3, 0.5)  # must be ordered
        with pytest.raises(ValueError):
            NoiseModel(3, 1, 2, 0.6, 0.3, 0.2)  # sums to 1.1

    def test_three_class_distribution_values(self):
        # the fully written-out 3-class table
        m = FIG6
        assert case_probability(m, LabelSet.from_labels(3, [1, 2]), 1) == pytest.approx(0.4)
        assert case_probability(m, LabelSet.from_labels(3, [1]), 1) == pytest.approx(0.175)
        assert case_probability(m, LabelSet.from_labels(3, [1, 3]), 1) == pytest.approx(0.175)
        assert case_probability(m, LabelSet.from_labels(3, [2]), 2) == pytest.approx(0.25 / 3)
        assert case_probability(m, LabelSet.from_labels(3, [3]), 3) == pytest.approx(0.25 / 3)
        assert case_probability(m, LabelSet.from_labels(3, [2, 3]), 2) == pytest.approx(0.25 / 6)
        assert case_probability(m, LabelSet.from_labels(3, [2, 3]), 3) == pytest.approx(0.25 / 6)

    def test_zero_cases(self):
        m = FIG6
        assert case_probability(m, LabelSet.full(3), 1) == 0.0
        assert case_probability(m, LabelSet.empty(3), 1) == 0.0
        # label not among the candidates
        assert case_probability(m, LabelSet.from_labels(3, [2]), 1) == 0.0
        # the query's true label can never be a false positive
        assert case_probability(m, LabelSet.from_labels(3, [1, 2]), 2) == 0.0

    @pytest.mark.parametrize("l", [3, 4, 5])
    def test_distribution_normalizes(self, l):
        m = NoiseModel(l, 1, 2, 0.4, 0.35, 0.25)
        total = sum(case_probability(m, s, y) for s, y in enumerate_pairs(m))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestSampler:
    def test_hard_constraints(self, rng):
        m = FIG6
        for _ in range(500):
            s, y = sample_candidate_set(m, rng)
            assert y in s
            assert not s.is_empty and not s.is_full
            if y != m.true_label:
                assert m.true_label not in s

    def test_empirical_frequencies(self):
        rng = np.random.default_rng(17)
        m = FIG6
        target = LabelSet.from_labels(3, [1, 2])
        draws = 100_000
        hits = sum(
            1
            for _ in range(draws)
            if sample_candidate_set(m, rng) == (target, 1)
        )
        sigma = (0.4 * 0.6 / draws) ** 0.5
        assert hits / draws == pytest.approx(0.4, abs=3 * sigma)

    def test_case_vi_total_mass(self):
        m = FIG6
        mass = sum(
            case_probability(m, s, y)
            for s, y in enumerate_pairs(m)
            if y != m.true_label
        )
        assert mass == pytest.approx(m.p3, abs=1e-12)


class TestClosedForm:
    def test_single_neighbor_anchors(self):
        assert expected_belief_true(FIG6, 1) == pytest.approx(0.0875, abs=1e-12)
        assert expected_belief_cooccur(FIG6, 1) == pytest.approx(0.25 / 6, abs=1e-12)

    def test_matches_exhaustive_expectation(self):
        # independent oracle: enumerate every possible draw tuple, weight by
        # its probability, and run the real fusion pipeline
        m = FIG6
        pairs = [(s, y, case_probability(m, s, y)) for s, y in enumerate_pairs(m)]
        pairs = [(s, p) for s, y, p in pairs if p > 0]
        frame = LabelSet.full(3)
        s_true = LabelSet.singleton(3, 1)
        s_partner = LabelSet.singleton(3, 2)
        for k in (1, 2, 3):
            exp_true = 0.0
            exp_partner = 0.0
            for combo in product(range(len(pairs)), repeat=k):
                prob = 1.0
                for i in combo:
                    prob *= pairs[i][1]
                fused = yager_combine(
                    frame, [neighbor_bpa(frame, pairs[i][0], 0.5) for i in combo]
                )
                exp_true += prob * belief(fused, s_true)
                exp_partner += prob * belief(fused, s_partner)
            assert expected_belief_true(m, k) == pytest.approx(exp_true, abs=1e-10)
            assert expected_belief_cooccur(m, k) == pytest.approx(exp_partner, abs=1e-10)

    def test_float_engine_matches_exact_engine(self):
        for k in (1, 3, 7, 10):
            ft = expected_belief_true(FIG6, k)
            et = expected_belief_true_exact(FIG6, k)
            assert abs(Fraction(ft) - et) / et < 1e-11
            fc = expected_belief_cooccur(FIG6, k)
            ec = expected_belief_cooccur_exact(FIG6, k)
            assert abs(Fraction(fc) - ec) / ec < 1e-11

    def test_positive_and_dominant(self):
        for k in range(1, 16):
            t = expected_belief_true(FIG6, k)
            c = expected_belief_cooccur(FIG6, k)
            assert t > 0.0
            assert t > c

    def test_four_class_positive_dominant(self):
        m = NoiseModel(4, 2, 4, 0.5, 0.3, 0.2)
        for k in (1, 3, 6):
            assert expected_belief_true(m, k) > expected_belief_cooccur(m, k) > 0.0

    def test_tail_decreases_toward_zero(self):
        # the curves rise for the first few neighbors, then decay toward 0;
        # check strict decay past the peak and smallness at the far end
        true_vals = [expected_belief_true(FIG6, k) for k in range(1, 16)]
        cooccur_vals = [expected_belief_cooccur(FIG6, k) for k in range(1, 16)]
        peak_t = true_vals.index(max(true_vals))
        peak_c = cooccur_vals.index(max(cooccur_vals))
        assert all(a > b for a, b in zip(true_vals[peak_t:], true_vals[peak_t + 1 :]))
        assert all(a > b for a, b in zip(cooccur_vals[peak_c:], cooccur_vals[peak_c + 1 :]))
        assert expected_belief_true(FIG6, 40) < 0.01
        assert expected_belief_cooccur(FIG6, 40) < 0.001

    def test_budget_guard(self):
        with pytest.raises(BudgetExceeded):
            expected_belief_true(FIG6, 61)
        expected_belief_true(FIG6, 8, budget=10**4)
        with pytest.raises(BudgetExceeded):
            expected_belief_true(FIG6, 8, budget=10**3)


class TestSimulation:
    def test_deterministic(self):
        a = simulate_expected_belief(FIG6, 4, 2000, 5)
        b = simulate_expected_belief(FIG6, 4, 2000, 5)
        assert a == b

    def test_matches_closed_form(self):
        for k in (1, 4, 9):
            sim = simulate_expected_belief(FIG6, k, 20_000, 31)
            assert sim.mean_true == pytest.approx(
                expected_belief_true(FIG6, k), abs=max(3.5 * sim.stderr_true, 1e-3)
            )
            assert sim.mean_cooccur == pytest.approx(
                expected_belief_cooccur(FIG6, k), abs=max(3.5 * sim.stderr_cooccur, 1e-3)
            )


class TestRiskCurve:
    def test_near_certain_labels_low_risk_small_n(self):
        # vanishing irrelevant-neighbor noise: risk is small even with
        # little data (note a partner-heavy model like (0.98, 0.01, 0.01)
        # is NOT benign: every neighbor then pairs the true label with its
        # partner and the fused evidence cannot separate the two)
        gentle = NoiseModel(3, 1, 2, 0.495, 0.495, 0.01)
        points = risk_curve(gentle, [60], 5, 3, 1, queries=100)
        assert points[0].mean_risk < 0.08

    def test_shape_and_validation(self):
        points = risk_curve(NoiseModel(*DEFAULT_RISK_MODEL_ARGS), [40, 80], 5, 2, 0, queries=40)
        assert [p.n for p in points] == [40, 80]
        assert all(0.0 <= p.mean_risk <= 1.0 for p in points)
        with pytest.raises(ValueError):
            risk_curve(FIG6, [4], 5, 2, 0)

    def test_geometry_constant_documented(self):
        assert CLUSTER_JITTER == 0.24


class TestExactBinomialCheck:
    def test_small_sweep(self):
        report = exact_binomial_check(4)
        assert report.inequality_ok
        assert report.strict_cases > 0
        assert report.max_rel_error < 1e-9
        assert report.ok

    def test_k_max_guard(self):
        with pytest.raises(ValueError):
            exact_binomial_check(21)
