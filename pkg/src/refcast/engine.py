"""Regression of inside-view estimates toward the reference class mean.

Steps 3-5 of the outside-view procedure: record the intuitive estimate,
attach a reliability coefficient (historical correlation between past
predictions and outcomes, or a declared subjective judgment), and correct

    R = mu + rho * (I - mu)

so an unreliable estimate collapses to the class mean and a perfectly
reliable one is kept as-is. Also builds uplifted budgets from a cost
reference class, including the 50%-of-uplift risk allowance used in
funding regimes that ring-fence contingency money.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from decimal import Decimal
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .core import DeviationMetric, Money, to_decimal
from .errors import (
    ClampedCorrelationWarning,
    DegenerateVariance,
    InsufficientPairs,
    InvalidValue,
    VariableMismatch,
)
from .refclass import DistributionSummary, ReferenceClass, UpliftQuery, uplift

RHO_SOURCES = ("historical", "subjective")


class EstimateVariable(enum.Enum):
    """What an intuitive estimate is denominated in."""

    TOTAL_COST = "total_cost"
    DEVIATION_FRACTION = "deviation_fraction"
    DURATION_DAYS = "duration_days"
    BENEFIT = "benefit"


@dataclass(frozen=True)
class IntuitiveEstimate:
    """Step-3 inside-view prediction, unit made explicit."""

    value: float
    variable: EstimateVariable

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise InvalidValue(f"intuitive estimate must be finite, got {self.value}")
        if self.variable in (EstimateVariable.TOTAL_COST, EstimateVariable.DURATION_DAYS):
            if self.value <= 0:
                raise InvalidValue(
                    f"{self.variable.value} estimate must be positive, got {self.value}"
                )


@dataclass(frozen=True)
class ReliabilityEstimate:
    """Step-4 predictive reliability: 0 is no correlation, 1 is complete."""

    rho: float
    source: str
    n_pairs: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidValue(f"reliability must lie in [0, 1], got {self.rho}")
        if self.source not in RHO_SOURCES:
            raise InvalidValue(f"reliability source must be one of {RHO_SOURCES}")
        if self.source == "historical" and (self.n_pairs is None or self.n_pairs < 3):
            raise InvalidValue("historical reliability needs the number of pairs it came from")


@dataclass(frozen=True)
class RegressedForecast:
    """Step-5 output: the corrected estimate with its full provenance."""

    class_mean: float
    intuitive: float
    rho: float
    corrected: float
    rho_source: str
    variable: EstimateVariable
    class_id: str | None = None

    def __post_init__(self) -> None:
        lo, hi = min(self.class_mean, self.intuitive), max(self.class_mean, self.intuitive)
        if not lo <= self.corrected <= hi:
            raise InvalidValue(
                f"corrected estimate {self.corrected} escapes [{lo}, {hi}]"
            )

    def to_json(self) -> dict:
        doc = {
            "class_mean": self.class_mean,
            "intuitive": self.intuitive,
            "rho": self.rho,
            "rho_source": self.rho_source,
            "corrected": self.corrected,
            "variable": self.variable.value,
        }
        if self.class_id:
            doc["class_id"] = self.class_id
        return doc


@dataclass(frozen=True)
class RiskAllowance:
    """Ring-fenced risk budget: half of the optimism-bias uplift amount."""

    uplift_amount: Money
    allowance_amount: Money

    def __post_init__(self) -> None:
        self.uplift_amount.require_same_unit(self.allowance_amount)
        if self.allowance_amount.amount * 2 != self.uplift_amount.amount:
            raise InvalidValue("risk allowance must be exactly half the uplift amount")

    @classmethod
    def from_uplift(cls, uplift_amount: Money) -> "RiskAllowance":
        return cls(uplift_amount, uplift_amount * Decimal("0.5"))


class UpliftedForecast(NamedTuple):
    budget: Money
    uplift_fraction: float
    allowance: RiskAllowance


def estimate_reliability(pairs: Sequence[tuple[float, float]]) -> ReliabilityEstimate:
    """Pearson correlation between past predictions and their outcomes.

    Negative raw correlations clamp to zero with a warning: a
    worse-than-useless forecaster earns full regression to the mean, not
    an inverted forecast.
    """
    if len(pairs) < 3:
        raise InsufficientPairs(
            f"need at least 3 prediction/outcome pairs, got {len(pairs)}; "
            "supply a subjective reliability instead"
        )
    predictions = np.asarray([p for p, _ in pairs], dtype=float)
    outcomes = np.asarray([o for _, o in pairs], dtype=float)
    if np.ptp(predictions) == 0.0 or np.ptp(outcomes) == 0.0:
        raise DegenerateVariance("a constant series has no correlation to measure")
    raw = float(stats.pearsonr(predictions, outcomes).statistic)
    # exact linear relations come back a few ulp shy of +/-1; snap them
    # so a perfect predictor really gets rho == 1
    if abs(abs(raw) - 1.0) < 1e-12:
        raw = math.copysign(1.0, raw)
    rho = raw
    if raw < 0.0:
        warnings.warn(
            f"raw correlation {raw:.4f} is negative; clamped to 0",
            ClampedCorrelationWarning,
            stacklevel=2,
        )
        rho = 0.0
    return ReliabilityEstimate(rho=min(rho, 1.0), source="historical", n_pairs=len(pairs))


def regress(
    class_mean: DistributionSummary | float,
    intuitive: IntuitiveEstimate,
    reliability: ReliabilityEstimate,
    mean_variable: EstimateVariable | None = None,
    class_id: str | None = None,
) -> RegressedForecast:
    """Correct the intuitive estimate toward the class mean (step 5).

    ``class_mean`` is either a deviation-distribution summary (its mean
    is a deviation fraction) or a bare mean, in which case
    ``mean_variable`` must say what it measures. The estimate and the
    mean must live in the same variable; total cost and deviation
    fraction are never mixed silently.
    """
    if isinstance(class_mean, DistributionSummary):
        mu = class_mean.mean
        variable = EstimateVariable.DEVIATION_FRACTION
        if mean_variable is not None and mean_variable is not variable:
            raise VariableMismatch(
                "a distribution summary's mean is a deviation fraction, "
                f"not {mean_variable.value}"
            )
    else:
        mu = float(class_mean)
        if mean_variable is None:
            raise InvalidValue("a bare class mean needs mean_variable to say what it measures")
        variable = mean_variable
    if intuitive.variable is not variable:
        raise VariableMismatch(
            f"intuitive estimate is in {intuitive.variable.value} "
            f"but the class mean is in {variable.value}"
        )
    rho = reliability.rho
    if rho == 1.0:
        corrected = intuitive.value
    elif rho == 0.0:
        corrected = mu
    else:
        corrected = mu + rho * (intuitive.value - mu)
        lo, hi = min(mu, intuitive.value), max(mu, intuitive.value)
        corrected = min(max(corrected, lo), hi)
    return RegressedForecast(
        class_mean=mu,
        intuitive=intuitive.value,
        rho=rho,
        corrected=corrected,
        rho_source=reliability.source,
        variable=variable,
        class_id=class_id,
    )


def forecast_with_uplift(
    base_estimate: Money,
    ref_class: ReferenceClass,
    query: UpliftQuery,
    clamp_nonnegative: bool = False,
) -> UpliftedForecast:
    """Uplifted budget at the accepted overrun risk, plus the allowance.

    budget = base * (1 + uplift); the allowance is half the uplift in
    currency. A negative uplift (strong underrun history) still shrinks
    the budget but yields a zero allowance — there is no contingency
    to ring-fence half of.
    """
    if base_estimate.amount <= 0:
        raise InvalidValue("base estimate must be positive")
    if ref_class.filter.metric is not DeviationMetric.COST_OVERRUN:
        raise VariableMismatch(
            "budget uplifts need a cost-overrun class, "
            f"got {ref_class.filter.metric.value}"
        )
    fraction = uplift(ref_class, query, clamp_nonnegative=clamp_nonnegative)
    budget = base_estimate * to_decimal(1.0 + fraction, "uplift factor")
    if budget >= base_estimate:
        uplift_amount = budget - base_estimate
    else:
        uplift_amount = base_estimate * 0
    return UpliftedForecast(budget, fraction, RiskAllowance.from_uplift(uplift_amount))
