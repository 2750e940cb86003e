"""Reference class selection and the empirical deviation distribution.

A reference class is the set of completed, comparable projects whose
realized deviations (overrun / shortfall / slip fractions) anchor the
outside view. This module screens a dataset into a class, summarizes the
deviation distribution, tests two classes for comparability, and answers
uplift queries: the percentage to add to a base estimate so the budget
is exceeded with at most an accepted probability.

Quantiles use the nearest-rank-ceiling convention: the uplift at
acceptable risk p is the smallest sample deviation whose empirical CDF
reaches 1 - p. This is conservative for budgets and exactly reproducible;
rank arithmetic is done in exact rationals so boundary percentiles never
fall victim to binary rounding.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .core import DeviationMetric, ProjectRecord, deviation
from .errors import (
    ClassTooSmall,
    InvalidValue,
    IoError,
    MetricMismatch,
    NegativeUpliftWarning,
    NoMatch,
    ParseError,
    SmallClassWarning,
)
from .ingest import Dataset, record_from_cells, _record_to_json_obj, _json_obj_to_cells

MIN_CLASS_SIZE = 5
COMFORTABLE_CLASS_SIZE = 20

# largest sample size at which the exact two-sample KS null distribution
# is used; beyond it the asymptotic Kolmogorov approximation takes over
KS_EXACT_LIMIT = 35


@dataclass(frozen=True)
class ClassFilter:
    """Selectors for comparable projects (step 1 of the procedure).

    Empty selector sets mean "no constraint on this attribute", but at
    least one selector must be active unless ``match_all`` is set
    explicitly: an unconstrained class should be a deliberate choice.
    """

    metric: DeviationMetric
    project_types: frozenset[str] = frozenset()
    stages: frozenset[str] = frozenset()
    regime_tags_required: frozenset[str] = frozenset()
    year_range: tuple[int, int] | None = None
    match_all: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "project_types", frozenset(self.project_types))
        object.__setattr__(self, "stages", frozenset(self.stages))
        object.__setattr__(self, "regime_tags_required", frozenset(self.regime_tags_required))
        if self.year_range is not None:
            lo, hi = self.year_range
            if lo > hi:
                raise InvalidValue(f"year_range minimum {lo} exceeds maximum {hi}")
            object.__setattr__(self, "year_range", (int(lo), int(hi)))
        has_selector = bool(
            self.project_types or self.stages or self.regime_tags_required or self.year_range
        )
        if not has_selector and not self.match_all:
            raise InvalidValue("filter selects nothing; set match_all=True to mean everything")

    def matches(self, record: ProjectRecord) -> bool:
        if self.project_types and record.project_type not in self.project_types:
            return False
        if self.stages and record.stage not in self.stages:
            return False
        if self.regime_tags_required and not self.regime_tags_required <= record.regime_tags:
            return False
        if self.year_range is not None:
            lo, hi = self.year_range
            if not lo <= record.year <= hi:
                return False
        return True

    def to_json(self) -> dict:
        doc: dict = {"metric": self.metric.value}
        if self.project_types:
            doc["project_types"] = sorted(self.project_types)
        if self.stages:
            doc["stages"] = sorted(self.stages)
        if self.regime_tags_required:
            doc["regime_tags_required"] = sorted(self.regime_tags_required)
        if self.year_range is not None:
            doc["year_range"] = list(self.year_range)
        if self.match_all:
            doc["match_all"] = True
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ClassFilter":
        try:
            metric = DeviationMetric(doc["metric"])
        except (KeyError, ValueError) as exc:
            raise ParseError(f"filter document needs a valid metric: {exc}") from exc
        year_range = doc.get("year_range")
        return cls(
            metric=metric,
            project_types=frozenset(doc.get("project_types", ())),
            stages=frozenset(doc.get("stages", ())),
            regime_tags_required=frozenset(doc.get("regime_tags_required", ())),
            year_range=tuple(year_range) if year_range else None,
            match_all=bool(doc.get("match_all", False)),
        )


@dataclass(frozen=True)
class ReferenceClass:
    """Screened class members with their deviations cached."""

    members: tuple[ProjectRecord, ...]
    filter: ClassFilter
    deviations: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "deviations", tuple(self.deviations))
        if len(self.members) < 1:
            raise InvalidValue("reference class needs at least one member")
        if len(self.members) != len(self.deviations):
            raise InvalidValue("one cached deviation per member required")
        for record, cached in zip(self.members, self.deviations):
            if deviation(record, self.filter.metric) != cached:
                raise InvalidValue(f"{record.id}: cached deviation is stale")

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class UpliftQuery:
    """Acceptable probability of exceeding the uplifted budget."""

    acceptable_overrun_risk: float

    def __post_init__(self) -> None:
        if not 0 < self.acceptable_overrun_risk < 1:
            raise InvalidValue(
                f"acceptable risk must be inside (0, 1), got {self.acceptable_overrun_risk}"
            )


@dataclass(frozen=True)
class DistributionSummary:
    """Sample statistics plus the ECDF of the deviation sample."""

    n: int
    mean: float
    median: float
    min: float
    max: float
    stdev: float
    ecdf_points: tuple[tuple[float, float], ...]

    def ecdf(self, x: float) -> float:
        """Right-continuous ECDF: fraction of the sample <= x."""
        result = 0.0
        for value, cumulative in self.ecdf_points:
            if value <= x:
                result = cumulative
            else:
                break
        return result

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "median": self.median,
            "min": self.min,
            "max": self.max,
            "stdev": self.stdev,
            "ecdf_points": [[v, c] for v, c in self.ecdf_points],
        }

    def ecdf_csv(self) -> str:
        """Plot-ready ECDF as delimited text (deviation, cumulative fraction)."""
        lines = ["deviation,cumulative_fraction"]
        lines += [f"{v!r},{c!r}" for v, c in self.ecdf_points]
        return "\n".join(lines) + "\n"

    def write_ecdf_csv(self, path: str | Path) -> None:
        try:
            Path(path).write_text(self.ecdf_csv(), encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc


class ComparabilityResult(NamedTuple):
    statistic: float
    p_value: float
    comparable: bool


def build_class(dataset: Dataset, class_filter: ClassFilter) -> ReferenceClass:
    """Select matching records that carry the metric's actuals (step 1).

    Raises :class:`NoMatch` for an empty selection and
    :class:`ClassTooSmall` below 5 members; emits
    :class:`SmallClassWarning` below 20 (the one concretely documented
    reference class in transport practice had 46).
    """
    members: list[ProjectRecord] = []
    devs: list[float] = []
    for record in dataset.records:
        if not class_filter.matches(record):
            continue
        if not record.has_metric_fields(class_filter.metric):
            continue
        members.append(record)
        devs.append(deviation(record, class_filter.metric))
    if not members:
        raise NoMatch("no record matches the class filter with the metric's actuals present")
    if len(members) < MIN_CLASS_SIZE:
        raise ClassTooSmall(
            f"only {len(members)} matching records; at least {MIN_CLASS_SIZE} required"
        )
    if len(members) < COMFORTABLE_CLASS_SIZE:
        warnings.warn(
            f"reference class has only {len(members)} members; treat quantiles with care",
            SmallClassWarning,
            stacklevel=2,
        )
    return ReferenceClass(tuple(members), class_filter, tuple(devs))


def summarize(ref_class: ReferenceClass) -> DistributionSummary:
    """Exact sample statistics and the ECDF step function (step 2)."""
    devs = sorted(ref_class.deviations)
    n = len(devs)
    mean = math.fsum(devs) / n
    median = float(np.median(devs))
    stdev = float(np.std(devs, ddof=1)) if n > 1 else 0.0
    points: list[tuple[float, float]] = []
    for i, value in enumerate(devs, start=1):
        if points and points[-1][0] == value:
            points[-1] = (value, i / n)
        else:
            points.append((value, i / n))
    return DistributionSummary(
        n=n,
        mean=mean,
        median=median,
        min=devs[0],
        max=devs[-1],
        stdev=stdev,
        ecdf_points=tuple(points),
    )


def comparability_test(
    class_a: ReferenceClass, class_b: ReferenceClass, alpha: float = 0.05
) -> ComparabilityResult:
    """Two-sample Kolmogorov-Smirnov test between deviation samples.

    ``comparable`` is true when the test fails to reject at ``alpha``,
    i.e. the two classes could plausibly share one outcome distribution.
    The exact null distribution is used up to samples of 35, the
    asymptotic approximation beyond.
    """
    if class_a.filter.metric is not class_b.filter.metric:
        raise MetricMismatch(
            f"classes measure different deviations: "
            f"{class_a.filter.metric.value} vs {class_b.filter.metric.value}"
        )
    if not 0 < alpha < 1:
        raise InvalidValue(f"alpha must be inside (0, 1), got {alpha}")
    a = np.asarray(class_a.deviations, dtype=float)
    b = np.asarray(class_b.deviations, dtype=float)
    method = "exact" if max(len(a), len(b)) <= KS_EXACT_LIMIT else "asymp"
    result = stats.ks_2samp(a, b, method=method)
    statistic = float(result.statistic)
    p_value = float(result.pvalue)
    return ComparabilityResult(statistic, p_value, p_value >= alpha)


def empirical_uplift(sample: Sequence[float], p: float, clamp_nonnegative: bool = False) -> float:
    """Nearest-rank-ceiling quantile of ``sample`` at level 1 - p.

    Returns the smallest sample value whose ECDF is at least 1 - p, so
    at most a fraction p of the sample strictly exceeds it. The rank
    ceil(n * (1 - p)) is computed in exact rational arithmetic.
    """
    if not 0 < p < 1:
        raise InvalidValue(f"acceptable risk must be inside (0, 1), got {p}")
    values = sorted(sample)
    n = len(values)
    if n == 0:
        raise InvalidValue("cannot take a quantile of an empty sample")
    rank = math.ceil(Fraction(n) * (1 - Fraction(p)))
    rank = min(max(rank, 1), n)
    result = values[rank - 1]
    if result < 0:
        if clamp_nonnegative:
            return 0.0
        warnings.warn(
            f"uplift at risk {p} is negative ({result:.4f}); the class median project underran",
            NegativeUpliftWarning,
            stacklevel=2,
        )
    return result


def uplift(
    ref_class: ReferenceClass, query: UpliftQuery, clamp_nonnegative: bool = False
) -> float:
    """Optimism-bias uplift for the accepted overrun risk.

    The uplifted budget is forecast * (1 + u); the fraction of class
    members whose deviation exceeded u is at most the accepted risk.
    """
    return empirical_uplift(
        ref_class.deviations, query.acceptable_overrun_risk, clamp_nonnegative
    )


def save_class(ref_class: ReferenceClass, path: str | Path) -> None:
    """Persist a built class (filter provenance + members + deviations)."""
    doc = {
        "schema_version": 1,
        "filter": ref_class.filter.to_json(),
        "members": [_record_to_json_obj(r) for r in ref_class.members],
        "deviations": list(ref_class.deviations),
    }
    try:
        Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_class(path: str | Path) -> ReferenceClass:
    """Load a class file; cached deviations are re-verified on load."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "filter" not in doc or "members" not in doc:
        raise ParseError(f"{path}: expected a class document with filter and members")
    class_filter = ClassFilter.from_json(doc["filter"])
    members = []
    for i, obj in enumerate(doc["members"], start=1):
        cells = _json_obj_to_cells(obj, i)
        try:
            members.append(record_from_cells(cells, i))
        except Exception as exc:
            raise ParseError(f"{path}: member #{i} invalid: {exc}") from exc
    devs = [deviation(r, class_filter.metric) for r in members]
    stored = doc.get("deviations")
    if stored is not None and [float(x) for x in stored] != devs:
        raise ParseError(f"{path}: stored deviations do not match the members")
    return ReferenceClass(tuple(members), class_filter, tuple(devs))
