"""One document tying the whole forecasting procedure together.

The report walks the five steps in order — class, distribution,
intuitive estimate, reliability, corrected estimate — then the budget
arithmetic: uplift at the accepted risk, the resulting budget, and the
ring-fenced risk allowance. It exists so a decision maker sees where
every number came from, including whether the reliability was measured
or asserted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Money
from .engine import (
    EstimateVariable,
    IntuitiveEstimate,
    RegressedForecast,
    ReliabilityEstimate,
    RiskAllowance,
    forecast_with_uplift,
    regress,
)
from .ingest import Dataset
from .refclass import (
    ClassFilter,
    DistributionSummary,
    ReferenceClass,
    UpliftQuery,
    build_class,
    summarize,
)


def describe_filter(class_filter: ClassFilter) -> str:
    parts = [f"metric {class_filter.metric.value}"]
    if class_filter.project_types:
        parts.append("types: " + ", ".join(sorted(class_filter.project_types)))
    if class_filter.stages:
        parts.append("stages: " + ", ".join(sorted(class_filter.stages)))
    if class_filter.regime_tags_required:
        parts.append("tags: " + ", ".join(sorted(class_filter.regime_tags_required)))
    if class_filter.year_range:
        lo, hi = class_filter.year_range
        parts.append(f"years {lo}-{hi}")
    if class_filter.match_all:
        parts.append("all records")
    return "; ".join(parts)


def _pct(x: float) -> str:
    return f"{x * 100:+.1f}%"


@dataclass(frozen=True)
class FiveStepReport:
    """Assembled narrative: every step's inputs and outputs in one place."""

    filter_description: str
    n_members: int
    summary: DistributionSummary
    regressed: RegressedForecast
    base_estimate: Money
    risk: float
    uplift_fraction: float
    budget: Money
    allowance: RiskAllowance

    def to_json(self) -> dict:
        return {
            "step1_reference_class": {
                "filter": self.filter_description,
                "members": self.n_members,
            },
            "step2_distribution": self.summary.to_json(),
            "step3_intuitive": {
                "value": self.regressed.intuitive,
                "variable": self.regressed.variable.value,
            },
            "step4_reliability": {
                "rho": self.regressed.rho,
                "source": self.regressed.rho_source,
            },
            "step5_corrected": {
                "value": self.regressed.corrected,
                "class_mean": self.regressed.class_mean,
            },
            "budget": {
                "base_estimate": self.base_estimate.to_json(),
                "accepted_overrun_risk": self.risk,
                "uplift_fraction": self.uplift_fraction,
                "budget": self.budget.to_json(),
                "uplift_amount": self.allowance.uplift_amount.to_json(),
                "risk_allowance": self.allowance.allowance_amount.to_json(),
            },
        }

    def to_text(self) -> str:
        s = self.summary
        in_cost_space = self.regressed.variable is EstimateVariable.TOTAL_COST
        if in_cost_space:
            step3 = f"{self.regressed.intuitive:,.1f} (inside-view total cost)"
            step5 = (
                f"{self.regressed.corrected:,.1f} "
                f"(regressed from {self.regressed.intuitive:,.1f} "
                f"toward class mean {self.regressed.class_mean:,.1f})"
            )
        else:
            step3 = f"{_pct(self.regressed.intuitive)} deviation (inside view)"
            step5 = (
                f"{_pct(self.regressed.corrected)} deviation "
                f"(regressed from {_pct(self.regressed.intuitive)} "
                f"toward class mean {_pct(self.regressed.class_mean)})"
            )
        lines = [
            "Outside-view forecast",
            "=====================",
            "",
            "Step 1 - reference class",
            f"  {self.n_members} projects matching: {self.filter_description}",
            "Step 2 - outcome distribution",
            f"  n={s.n}  mean={_pct(s.mean)}  median={_pct(s.median)}  "
            f"min={_pct(s.min)}  max={_pct(s.max)}  stdev={s.stdev * 100:.1f}pp",
            "Step 3 - intuitive estimate",
            f"  {step3}",
            "Step 4 - reliability of the intuitive estimate",
            f"  rho = {self.regressed.rho:.3f} ({self.regressed.rho_source})",
            "Step 5 - corrected estimate",
            f"  {step5}",
            "",
            f"Budget at accepted overrun risk {self.risk * 100:.0f}%",
            f"  base estimate   {self.base_estimate}",
            f"  uplift          {_pct(self.uplift_fraction)}",
            f"  budget          {self.budget}",
            f"  risk allowance  {self.allowance.allowance_amount} "
            f"(half of the {self.allowance.uplift_amount.amount} uplift)",
        ]
        return "\n".join(lines) + "\n"


def five_step_report(
    dataset: Dataset,
    class_filter: ClassFilter,
    base_estimate: Money,
    query: UpliftQuery,
    intuitive: IntuitiveEstimate,
    reliability: ReliabilityEstimate,
    cost_space_mean: float | None = None,
    clamp_nonnegative: bool = False,
) -> tuple[FiveStepReport, ReferenceClass]:
    """Run the full procedure over a dataset and assemble the report.

    Regression happens in deviation space against the class mean unless
    ``cost_space_mean`` supplies a total-cost class mean, in which case
    the intuitive estimate must be a total cost as well.
    """
    ref_class = build_class(dataset, class_filter)
    summary = summarize(ref_class)
    if cost_space_mean is not None:
        regressed = regress(
            cost_space_mean,
            intuitive,
            reliability,
            mean_variable=EstimateVariable.TOTAL_COST,
        )
    else:
        regressed = regress(summary, intuitive, reliability)
    budget, fraction, allowance = forecast_with_uplift(
        base_estimate, ref_class, query, clamp_nonnegative=clamp_nonnegative
    )
    report = FiveStepReport(
        filter_description=describe_filter(class_filter),
        n_members=len(ref_class),
        summary=summary,
        regressed=regressed,
        base_estimate=base_estimate,
        risk=query.acceptable_overrun_risk,
        uplift_fraction=fraction,
        budget=budget,
        allowance=allowance,
    )
    return report, ref_class
