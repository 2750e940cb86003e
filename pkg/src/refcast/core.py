"""Domain types and deviation arithmetic.

Money values carry an explicit currency and price basis; amounts are
``Decimal`` so budget splits and percentage rules stay exact. All the
distributional machinery downstream works in dimensionless deviation
fractions (plain floats): cost overrun, benefit shortfall and schedule
slip, each defined as (unfavorable - reference) / reference so that a
positive deviation is always bad news.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Mapping, Union

from .errors import InvalidValue, MissingField, MoneyMismatch, ZeroForecast

Numeric = Union[int, float, str, Decimal]

STAGES = ("programme-entry", "conditional-approval", "full-approval", "completed")


def to_decimal(value: Numeric, what: str = "amount") -> Decimal:
    """Convert to Decimal; floats go through repr() to keep them readable."""
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        value = repr(value)
    try:
        return Decimal(value)
    except InvalidOperation as exc:
        raise InvalidValue(f"{what}: {value!r} is not a number") from exc


@dataclass(frozen=True)
class PriceBasis:
    """Price basis tag: constant prices (with base year) or nominal."""

    kind: str  # "constant" | "nominal"
    base_year: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "nominal"):
            raise InvalidValue(f"price basis kind must be constant|nominal, got {self.kind!r}")
        if self.kind == "constant" and self.base_year is None:
            raise InvalidValue("constant-price basis requires a base year")
        if self.kind == "nominal" and self.base_year is not None:
            raise InvalidValue("nominal basis must not carry a base year")

    def label(self) -> str:
        if self.kind == "constant":
            return f"constant-{self.base_year}"
        return "nominal"


@dataclass(frozen=True)
class Money:
    """A non-negative amount in a declared currency and price basis.

    Arithmetic and comparisons require identical currency and basis;
    mixing raises :class:`MoneyMismatch` rather than silently converting.
    """

    amount: Decimal
    currency: str
    basis: PriceBasis

    def __post_init__(self) -> None:
        object.__setattr__(self, "amount", to_decimal(self.amount))
        if not self.currency:
            raise InvalidValue("currency code must be non-empty")
        if self.amount < 0:
            raise InvalidValue(f"money amount must be non-negative, got {self.amount}")

    @classmethod
    def constant(cls, amount: Numeric, currency: str, base_year: int) -> "Money":
        return cls(to_decimal(amount), currency, PriceBasis("constant", base_year))

    @classmethod
    def nominal(cls, amount: Numeric, currency: str) -> "Money":
        return cls(to_decimal(amount), currency, PriceBasis("nominal"))

    def require_same_unit(self, other: "Money", context: str = "operation") -> None:
        if self.currency != other.currency or self.basis != other.basis:
            raise MoneyMismatch(
                f"{context} mixes {self.currency}/{self.basis.label()} "
                f"with {other.currency}/{other.basis.label()}"
            )

    def __add__(self, other: "Money") -> "Money":
        self.require_same_unit(other, "addition")
        return Money(self.amount + other.amount, self.currency, self.basis)

    def __sub__(self, other: "Money") -> "Money":
        self.require_same_unit(other, "subtraction")
        result = self.amount - other.amount
        if result < 0:
            raise InvalidValue(f"subtraction underflows: {self.amount} - {other.amount}")
        return Money(result, self.currency, self.basis)

    def __mul__(self, scalar: Numeric) -> "Money":
        factor = to_decimal(scalar, "scale factor")
        if factor < 0:
            raise InvalidValue("cannot scale money by a negative factor")
        return Money(self.amount * factor, self.currency, self.basis)

    __rmul__ = __mul__

    def _cmp_key(self, other: "Money") -> tuple[Decimal, Decimal]:
        self.require_same_unit(other, "comparison")
        return self.amount, other.amount

    def __lt__(self, other: "Money") -> bool:
        a, b = self._cmp_key(other)
        return a < b

    def __le__(self, other: "Money") -> bool:
        a, b = self._cmp_key(other)
        return a <= b

    def __gt__(self, other: "Money") -> bool:
        a, b = self._cmp_key(other)
        return a > b

    def __ge__(self, other: "Money") -> bool:
        a, b = self._cmp_key(other)
        return a >= b

    def __float__(self) -> float:
        return float(self.amount)

    def __str__(self) -> str:
        return f"{self.amount} {self.currency} ({self.basis.label()})"

    def to_json(self) -> dict:
        doc = {"amount": str(self.amount), "currency": self.currency, "basis": self.basis.kind}
        if self.basis.base_year is not None:
            doc["base_year"] = self.basis.base_year
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "Money":
        basis = PriceBasis(doc.get("basis", "nominal"), doc.get("base_year"))
        return cls(to_decimal(doc["amount"]), doc["currency"], basis)


class DeviationMetric(enum.Enum):
    """The three deviation fractions; positive is unfavorable for all."""

    COST_OVERRUN = "cost_overrun"
    BENEFIT_SHORTFALL = "benefit_shortfall"
    SCHEDULE_SLIP = "schedule_slip"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class ProjectRecord:
    """One historical or candidate project.

    Records without actuals are valid: they are forecast subjects rather
    than reference-class members. The benefit pair shares ``benefit_unit``;
    durations are calendar days.
    """

    id: str
    project_type: str
    stage: str
    year: int
    forecast_cost: Money
    actual_cost: Money | None = None
    benefit_unit: str | None = None
    forecast_benefit: Decimal | None = None
    actual_benefit: Decimal | None = None
    forecast_duration_days: int | None = None
    actual_duration_days: int | None = None
    regime_tags: frozenset[str] = frozenset()
    extra: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidValue("record id must be non-empty")
        if not self.project_type:
            raise InvalidValue(f"{self.id}: project_type must be non-empty")
        if self.stage not in STAGES:
            raise InvalidValue(f"{self.id}: unknown stage {self.stage!r} (expected one of {STAGES})")
        if self.forecast_cost.amount <= 0:
            raise ZeroForecast(f"{self.id}: forecast cost must be > 0 (overrun undefined at 0)")
        if self.actual_cost is not None:
            self.forecast_cost.require_same_unit(self.actual_cost, f"{self.id}: cost pair")
        for name in ("forecast_benefit", "actual_benefit"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, to_decimal(value, name))
                if getattr(self, name) < 0:
                    raise InvalidValue(f"{self.id}: {name} must be non-negative")
                if self.benefit_unit is None:
                    raise InvalidValue(f"{self.id}: benefit values require a benefit_unit")
        for name in ("forecast_duration_days", "actual_duration_days"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise InvalidValue(f"{self.id}: {name} must be a positive integer")
        object.__setattr__(self, "regime_tags", frozenset(self.regime_tags))
        object.__setattr__(self, "extra", dict(self.extra))

    def has_metric_fields(self, metric: DeviationMetric) -> bool:
        """True when both sides of the metric's pair are present and usable."""
        if metric is DeviationMetric.COST_OVERRUN:
            return self.actual_cost is not None
        if metric is DeviationMetric.BENEFIT_SHORTFALL:
            return (
                self.forecast_benefit is not None
                and self.actual_benefit is not None
                and self.forecast_benefit > 0
            )
        return (
            self.forecast_duration_days is not None
            and self.actual_duration_days is not None
        )


def deviation(record: ProjectRecord, metric: DeviationMetric) -> float:
    """Relative deviation of actual from forecast, positive = unfavorable.

    cost_overrun = (actual - forecast) / forecast
    benefit_shortfall = (forecast - actual) / forecast
    schedule_slip = (actual - forecast) / forecast

    The fraction is dimensionless: 0.45 means the actual cost was 1.45x
    the forecast. Raises :class:`MissingField` when either side of the
    pair is absent and :class:`ZeroForecast` when the denominator is zero.
    """
    if metric is DeviationMetric.COST_OVERRUN:
        if record.actual_cost is None:
            raise MissingField(f"{record.id}: actual cost not recorded")
        forecast = record.forecast_cost.amount
        actual = record.actual_cost.amount
        return float((actual - forecast) / forecast)

    if metric is DeviationMetric.BENEFIT_SHORTFALL:
        if record.forecast_benefit is None or record.actual_benefit is None:
            raise MissingField(f"{record.id}: benefit forecast/actual not recorded")
        if record.forecast_benefit == 0:
            raise ZeroForecast(f"{record.id}: benefit forecast is zero")
        return float(
            (record.forecast_benefit - record.actual_benefit) / record.forecast_benefit
        )

    if record.forecast_duration_days is None or record.actual_duration_days is None:
        raise MissingField(f"{record.id}: duration forecast/actual not recorded")
    forecast_days = record.forecast_duration_days
    return (record.actual_duration_days - forecast_days) / forecast_days
