"""Five-step narrative assembly and the figure/CSV artifact writers."""

from __future__ import annotations

from decimal import Decimal

import pytest

from refcast import (
    ClassFilter,
    DeviationMetric,
    EstimateVariable,
    IntuitiveEstimate,
    Money,
    ReliabilityEstimate,
    UpliftQuery,
    five_step_report,
    forecast_with_uplift,
    summarize,
)
from refcast.errors import IoError
from refcast.plots import plot_calibration, plot_ecdf
from refcast.report import describe_filter
from refcast import calibration_report, simulate
from refcast.biassim import BiasParams, SimConfig

RAIL_FILTER = ClassFilter(
    metric=DeviationMetric.COST_OVERRUN,
    project_types=frozenset({"rail"}),
    stages=frozenset({"completed"}),
)


class TestDescribeFilter:
    def test_full_filter(self):
        text = describe_filter(
            ClassFilter(
                metric=DeviationMetric.COST_OVERRUN,
                project_types={"rail"},
                stages={"completed"},
                regime_tags_required={"uk"},
                year_range=(1998, 2004),
            )
        )
        assert "metric cost_overrun" in text
        assert "types: rail" in text
        assert "stages: completed" in text
        assert "years 1998-2004" in text
        assert "tags: uk" in text

    def test_match_all(self):
        text = describe_filter(
            ClassFilter(metric=DeviationMetric.SCHEDULE_SLIP, match_all=True)
        )
        assert "all records" in text


class TestFiveStepReport:
    def test_deviation_space_report(self, rail_dataset, rail_class):
        report, built = five_step_report(
            rail_dataset,
            RAIL_FILTER,
            base_estimate=Money.constant("255", "GBP", 2002),
            query=UpliftQuery(0.5),
            intuitive=IntuitiveEstimate(0.1, EstimateVariable.DEVIATION_FRACTION),
            reliability=ReliabilityEstimate(0.6, "subjective"),
        )
        assert built.members == rail_class.members
        assert report.n_members == 46
        summary = summarize(rail_class)
        assert report.summary == summary
        expected = summary.mean + 0.6 * (0.1 - summary.mean)
        assert report.regressed.corrected == pytest.approx(expected, abs=1e-12)
        assert report.budget.amount == Decimal("357.0")
        assert report.allowance.allowance_amount.amount == Decimal("51.00")

    def test_cost_space_report(self, rail_dataset):
        report, _ = five_step_report(
            rail_dataset,
            RAIL_FILTER,
            base_estimate=Money.constant("255", "GBP", 2002),
            query=UpliftQuery(0.5),
            intuitive=IntuitiveEstimate(260.0, EstimateVariable.TOTAL_COST),
            reliability=ReliabilityEstimate(0.6, "subjective"),
            cost_space_mean=350.0,
        )
        assert report.regressed.variable is EstimateVariable.TOTAL_COST
        assert report.regressed.corrected == pytest.approx(296.0, abs=1e-12)

    def test_budget_consistent_with_direct_forecast(self, rail_dataset, rail_class):
        report, _ = five_step_report(
            rail_dataset,
            RAIL_FILTER,
            base_estimate=Money.constant("100", "GBP", 2002),
            query=UpliftQuery(0.2),
            intuitive=IntuitiveEstimate(0.2, EstimateVariable.DEVIATION_FRACTION),
            reliability=ReliabilityEstimate(0.5, "subjective"),
        )
        direct = forecast_with_uplift(
            Money.constant("100", "GBP", 2002), rail_class, UpliftQuery(0.2)
        )
        assert report.budget == direct.budget
        assert report.uplift_fraction == direct.uplift_fraction

    def test_text_narrates_all_five_steps(self, rail_dataset):
        report, _ = five_step_report(
            rail_dataset,
            RAIL_FILTER,
            base_estimate=Money.constant("255", "GBP", 2002),
            query=UpliftQuery(0.5),
            intuitive=IntuitiveEstimate(0.1, EstimateVariable.DEVIATION_FRACTION),
            reliability=ReliabilityEstimate(0.6, "subjective"),
        )
        text = report.to_text()
        for step in range(1, 6):
            assert f"Step {step}" in text
        assert "46 projects" in text
        assert "357.0 GBP" in text
        assert "51.00 GBP" in text

    def test_json_keys_name_the_steps(self, rail_dataset):
        report, _ = five_step_report(
            rail_dataset,
            RAIL_FILTER,
            base_estimate=Money.constant("255", "GBP", 2002),
            query=UpliftQuery(0.5),
            intuitive=IntuitiveEstimate(0.1, EstimateVariable.DEVIATION_FRACTION),
            reliability=ReliabilityEstimate(0.6, "subjective"),
        )
        doc = report.to_json()
        for key in (
            "step1_reference_class",
            "step2_distribution",
            "step3_intuitive",
            "step4_reliability",
            "step5_corrected",
            "budget",
        ):
            assert key in doc
        assert doc["step2_distribution"]["n"] == 46
        assert doc["budget"]["budget"]["amount"] == "357.0"


class TestPlots:
    def test_ecdf_figure_written(self, rail_class, tmp_path):
        out = tmp_path / "ecdf.png"
        plot_ecdf(
            summarize(rail_class),
            out,
            uplifts=[(0.5, 0.4), (0.2, 0.5686274509803921)],
            title="rail overrun distribution",
        )
        assert out.stat().st_size > 5000

    def test_ecdf_figure_without_uplifts(self, rail_class, tmp_path):
        out = tmp_path / "bare.png"
        plot_ecdf(summarize(rail_class), out)
        assert out.exists()

    def test_calibration_figure_written(self, tmp_path):
        result = simulate(
            SimConfig(
                n_projects=40,
                trials=10,
                seed=3,
                log_mean=5.0,
                log_stdev=0.6,
                noise_stdev=0.25,
                bias=BiasParams(anchor_passthrough=True),
            )
        )
        out = tmp_path / "cal.png"
        plot_calibration(calibration_report(result), out)
        assert out.stat().st_size > 5000

    def test_unwritable_target_raises_io(self, rail_class, tmp_path):
        with pytest.raises(IoError):
            plot_ecdf(summarize(rail_class), tmp_path / "missing" / "deep" / "x.png")
