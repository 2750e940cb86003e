"""Reliability estimation, regression toward the mean, uplifted budgets."""

from __future__ import annotations

import math
import warnings
from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, strategies as st

from refcast import (
    ClassFilter,
    DeviationMetric,
    EstimateVariable,
    IntuitiveEstimate,
    Money,
    ReferenceClass,
    RegressedForecast,
    ReliabilityEstimate,
    RiskAllowance,
    UpliftQuery,
    estimate_reliability,
    forecast_with_uplift,
    regress,
    summarize,
)
from refcast.errors import (
    ClampedCorrelationWarning,
    DegenerateVariance,
    InsufficientPairs,
    InvalidValue,
    VariableMismatch,
)
from tests.conftest import make_record


class TestEstimateReliability:
    def test_perfect_predictor_is_exactly_one(self):
        result = estimate_reliability([(1.0, 1.0), (2.0, 2.0), (5.0, 5.0)])
        assert result.rho == 1.0
        assert result.source == "historical"
        assert result.n_pairs == 3

    def test_affine_predictor_is_exactly_one(self):
        # correlation is scale/offset invariant; the exact 1.0 matters
        # because regress() treats rho == 1 as "keep the estimate"
        pairs = [(x, 2.0 * x + 3.0) for x in (0.3, 1.7, 2.2, 9.1)]
        assert estimate_reliability(pairs).rho == 1.0

    def test_perfect_anticorrelation_clamps_to_zero(self):
        pairs = [(x, -x) for x in (1.0, 2.0, 4.0)]
        with pytest.warns(ClampedCorrelationWarning, match="clamped to 0"):
            result = estimate_reliability(pairs)
        assert result.rho == 0.0

    def test_noisy_negative_clamps_too(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 1, 30)
        pairs = list(zip(x.tolist(), (-x + rng.normal(0, 0.1, 30)).tolist()))
        with pytest.warns(ClampedCorrelationWarning):
            assert estimate_reliability(pairs).rho == 0.0

    def test_too_few_pairs(self):
        with pytest.raises(InsufficientPairs, match="subjective"):
            estimate_reliability([(1.0, 2.0), (2.0, 3.0)])

    def test_constant_series(self):
        with pytest.raises(DegenerateVariance):
            estimate_reliability([(1.0, 5.0), (1.0, 6.0), (1.0, 7.0)])
        with pytest.raises(DegenerateVariance):
            estimate_reliability([(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)])

    def test_matches_known_signal_to_noise_ratio(self):
        """Mean estimate over 1000 seeded 20-pair trials lands within 0.1
        of the analytic correlation of the generating process."""
        signal, noise = 1.0, 0.5
        analytic = signal / math.sqrt(signal**2 + noise**2)
        rng = np.random.default_rng(1979)
        estimates = []
        for _ in range(1000):
            prediction = rng.normal(0.0, signal, 20)
            outcome = prediction + rng.normal(0.0, noise, 20)
            estimates.append(estimate_reliability(list(zip(prediction, outcome))).rho)
        assert abs(np.mean(estimates) - analytic) < 0.1

    def test_result_always_in_unit_interval(self):
        rng = np.random.default_rng(8)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ClampedCorrelationWarning)
            for _ in range(50):
                n = int(rng.integers(3, 40))
                pairs = list(zip(rng.normal(0, 1, n), rng.normal(0, 1, n)))
                rho = estimate_reliability(pairs).rho
                assert 0.0 <= rho <= 1.0


class TestReliabilityEstimate:
    def test_bounds(self):
        for bad in (-0.01, 1.01):
            with pytest.raises(InvalidValue):
                ReliabilityEstimate(bad, "subjective")

    def test_source_vocabulary(self):
        with pytest.raises(InvalidValue):
            ReliabilityEstimate(0.5, "gut-feeling")

    def test_historical_needs_pair_count(self):
        with pytest.raises(InvalidValue):
            ReliabilityEstimate(0.5, "historical")
        ReliabilityEstimate(0.5, "historical", n_pairs=3)


class TestIntuitiveEstimate:
    def test_cost_and_duration_must_be_positive(self):
        with pytest.raises(InvalidValue):
            IntuitiveEstimate(0.0, EstimateVariable.TOTAL_COST)
        with pytest.raises(InvalidValue):
            IntuitiveEstimate(-5.0, EstimateVariable.DURATION_DAYS)

    def test_deviation_fraction_may_be_negative(self):
        IntuitiveEstimate(-0.2, EstimateVariable.DEVIATION_FRACTION)

    def test_must_be_finite(self):
        with pytest.raises(InvalidValue):
            IntuitiveEstimate(float("nan"), EstimateVariable.DEVIATION_FRACTION)


class TestRegress:
    def test_worked_example_to_full_precision(self):
        result = regress(
            7.0,
            IntuitiveEstimate(4.0, EstimateVariable.TOTAL_COST),
            ReliabilityEstimate(0.6, "subjective"),
            mean_variable=EstimateVariable.TOTAL_COST,
        )
        assert result.corrected == 5.2

    def test_full_reliability_keeps_estimate_bit_for_bit(self):
        intuitive = IntuitiveEstimate(4.000000000000001, EstimateVariable.TOTAL_COST)
        result = regress(
            7.0, intuitive, ReliabilityEstimate(1.0, "subjective"),
            mean_variable=EstimateVariable.TOTAL_COST,
        )
        assert result.corrected == intuitive.value

    def test_zero_reliability_collapses_to_mean(self):
        result = regress(
            7.0,
            IntuitiveEstimate(4.0, EstimateVariable.TOTAL_COST),
            ReliabilityEstimate(0.0, "subjective"),
            mean_variable=EstimateVariable.TOTAL_COST,
        )
        assert result.corrected == 7.0

    def test_accepts_distribution_summary(self, rail_class):
        summary = summarize(rail_class)
        result = regress(
            summary,
            IntuitiveEstimate(0.1, EstimateVariable.DEVIATION_FRACTION),
            ReliabilityEstimate(0.25, "subjective"),
        )
        assert result.class_mean == summary.mean
        assert result.variable is EstimateVariable.DEVIATION_FRACTION
        expected = summary.mean + 0.25 * (0.1 - summary.mean)
        assert result.corrected == pytest.approx(expected, abs=1e-15)

    def test_summary_mean_is_not_a_cost(self, rail_class):
        with pytest.raises(VariableMismatch):
            regress(
                summarize(rail_class),
                IntuitiveEstimate(0.1, EstimateVariable.DEVIATION_FRACTION),
                ReliabilityEstimate(0.5, "subjective"),
                mean_variable=EstimateVariable.TOTAL_COST,
            )

    def test_bare_mean_needs_variable(self):
        with pytest.raises(InvalidValue, match="mean_variable"):
            regress(
                7.0,
                IntuitiveEstimate(4.0, EstimateVariable.TOTAL_COST),
                ReliabilityEstimate(0.6, "subjective"),
            )

    def test_estimate_and_mean_must_share_variable(self):
        with pytest.raises(VariableMismatch):
            regress(
                7.0,
                IntuitiveEstimate(4.0, EstimateVariable.TOTAL_COST),
                ReliabilityEstimate(0.6, "subjective"),
                mean_variable=EstimateVariable.DURATION_DAYS,
            )

    def test_class_id_is_carried(self):
        result = regress(
            0.4,
            IntuitiveEstimate(0.1, EstimateVariable.DEVIATION_FRACTION),
            ReliabilityEstimate(0.5, "subjective"),
            mean_variable=EstimateVariable.DEVIATION_FRACTION,
            class_id="rail-uk",
        )
        assert result.class_id == "rail-uk"
        assert result.to_json()["class_id"] == "rail-uk"

    @given(
        mu=st.floats(-100, 100),
        intuitive=st.floats(0.01, 200),
        rho=st.floats(0, 1),
    )
    def test_corrected_lies_between_estimate_and_mean(self, mu, intuitive, rho):
        result = regress(
            mu,
            IntuitiveEstimate(intuitive, EstimateVariable.TOTAL_COST),
            ReliabilityEstimate(rho, "subjective"),
            mean_variable=EstimateVariable.TOTAL_COST,
        )
        lo, hi = min(mu, intuitive), max(mu, intuitive)
        assert lo <= result.corrected <= hi

    @given(
        mu=st.floats(-10, 10),
        intuitive=st.floats(-10, 10),
        rho_low=st.floats(0, 1),
        rho_high=st.floats(0, 1),
    )
    def test_less_reliable_means_closer_to_mean(self, mu, intuitive, rho_low, rho_high):
        if rho_low > rho_high:
            rho_low, rho_high = rho_high, rho_low

        def distance_from_mean(rho: float) -> float:
            result = regress(
                mu,
                IntuitiveEstimate(intuitive, EstimateVariable.DEVIATION_FRACTION),
                ReliabilityEstimate(rho, "subjective"),
                mean_variable=EstimateVariable.DEVIATION_FRACTION,
            )
            return abs(result.corrected - mu)

        assert distance_from_mean(rho_low) <= distance_from_mean(rho_high) + 1e-12

    def test_out_of_band_corrected_rejected(self):
        with pytest.raises(InvalidValue, match="escapes"):
            RegressedForecast(
                class_mean=7.0,
                intuitive=4.0,
                rho=0.6,
                corrected=9.0,
                rho_source="subjective",
                variable=EstimateVariable.TOTAL_COST,
            )


class TestForecastWithUplift:
    def test_edinburgh_p50_is_exact(self, rail_class):
        base = Money.constant("255", "GBP", 2002)
        result = forecast_with_uplift(base, rail_class, UpliftQuery(0.5))
        assert result.uplift_fraction == 0.4
        assert result.budget.amount == Decimal("357.0")
        assert result.allowance.uplift_amount.amount == Decimal("102.0")
        assert result.allowance.allowance_amount.amount == Decimal("51.00")

    def test_edinburgh_p80_with_documented_slack(self, rail_class):
        base = Money.constant("255", "GBP", 2002)
        result = forecast_with_uplift(base, rail_class, UpliftQuery(0.2))
        assert abs(float(result.budget.amount) - 400.0) <= 2.0

    def test_budget_formula(self, road_class):
        base = Money.constant("80", "GBP", 2002)
        result = forecast_with_uplift(base, road_class, UpliftQuery(0.5))
        assert result.budget.amount == Decimal("80") * Decimal("1.15")

    def test_base_must_be_positive(self, rail_class):
        with pytest.raises(InvalidValue):
            forecast_with_uplift(
                Money.constant("0", "GBP", 2002), rail_class, UpliftQuery(0.5)
            )

    def test_needs_a_cost_overrun_class(self):
        member = make_record(
            "b", benefit_unit="riders/day", forecast_benefit="100", actual_benefit="50"
        )
        shortfall_class = ReferenceClass(
            (member,),
            ClassFilter(metric=DeviationMetric.BENEFIT_SHORTFALL, project_types={"rail"}),
            (0.5,),
        )
        with pytest.raises(VariableMismatch):
            forecast_with_uplift(
                Money.constant("100", "GBP", 2002), shortfall_class, UpliftQuery(0.5)
            )

    def _class_from_deviations(self, devs) -> ReferenceClass:
        template = ClassFilter(metric=DeviationMetric.COST_OVERRUN, project_types={"rail"})
        members = tuple(
            make_record(f"d{i}", forecast="1000", actual=str(Decimal("1000") * (1 + Decimal(d))))
            for i, d in enumerate(devs)
        )
        return ReferenceClass(
            members, template, tuple(deviation_for(m) for m in members)
        )

    def test_all_zero_class_keeps_base(self):
        ref = self._class_from_deviations(["0"] * 6)
        base = Money.constant("255", "GBP", 2002)
        result = forecast_with_uplift(base, ref, UpliftQuery(0.2))
        assert result.budget == base
        assert result.uplift_fraction == 0.0
        assert result.allowance.allowance_amount.amount == 0

    def test_underrun_class_shrinks_budget_but_zero_allowance(self):
        ref = self._class_from_deviations(["-0.3", "-0.25", "-0.2", "-0.15", "-0.1"])
        base = Money.constant("100", "GBP", 2002)
        with pytest.warns():
            result = forecast_with_uplift(base, ref, UpliftQuery(0.5))
        assert result.uplift_fraction == -0.2
        assert result.budget.amount == Decimal("80.0")
        assert result.allowance.uplift_amount.amount == 0
        assert result.allowance.allowance_amount.amount == 0

    def test_clamped_underrun_keeps_base(self):
        ref = self._class_from_deviations(["-0.3", "-0.25", "-0.2", "-0.15", "-0.1"])
        base = Money.constant("100", "GBP", 2002)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            result = forecast_with_uplift(base, ref, UpliftQuery(0.5), clamp_nonnegative=True)
        assert result.budget == base

    def test_allowance_is_half_the_uplift_for_many_bases(self, rail_class):
        rng = np.random.default_rng(51)
        for _ in range(25):
            base = Money.constant(
                Decimal(int(rng.integers(1, 10**9))) / 100, "GBP", 2002
            )
            result = forecast_with_uplift(base, rail_class, UpliftQuery(0.5))
            allowance = result.allowance
            assert allowance.allowance_amount * 2 == allowance.uplift_amount
            assert result.budget - base == allowance.uplift_amount


def deviation_for(record):
    from refcast import deviation

    return deviation(record, DeviationMetric.COST_OVERRUN)


class TestRiskAllowance:
    def test_from_uplift_halves_exactly(self):
        amount = Money.constant("102", "GBP", 2002)
        allowance = RiskAllowance.from_uplift(amount)
        assert allowance.allowance_amount.amount == Decimal("51.0")

    def test_odd_penny_splits_without_loss(self):
        allowance = RiskAllowance.from_uplift(Money.nominal("0.01", "GBP"))
        assert allowance.allowance_amount.amount == Decimal("0.005")
        assert allowance.allowance_amount * 2 == allowance.uplift_amount

    def test_mismatched_halves_rejected(self):
        with pytest.raises(InvalidValue, match="half"):
            RiskAllowance(Money.nominal("100", "GBP"), Money.nominal("49", "GBP"))

    def test_units_must_match(self):
        from refcast.errors import MoneyMismatch

        with pytest.raises(MoneyMismatch):
            RiskAllowance(Money.nominal("100", "GBP"), Money.nominal("50", "EUR"))
