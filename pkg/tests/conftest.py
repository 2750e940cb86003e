"""Shared fixtures: bundled datasets and a compact record builder."""

from __future__ import annotations

import pytest

from refcast import (
    ClassFilter,
    DeviationMetric,
    Money,
    ProjectRecord,
    build_class,
    fixture_path,
    load_dataset,
)


def make_record(
    record_id: str,
    forecast: str = "100",
    actual: str | None = "140",
    *,
    project_type: str = "rail",
    stage: str = "completed",
    year: int = 2000,
    currency: str = "GBP",
    base_year: int = 2002,
    **kwargs,
) -> ProjectRecord:
    """One reference-class member with everything defaulted but overridable."""
    return ProjectRecord(
        id=record_id,
        project_type=project_type,
        stage=stage,
        year=year,
        forecast_cost=Money.constant(forecast, currency, base_year),
        actual_cost=None if actual is None else Money.constant(actual, currency, base_year),
        **kwargs,
    )


@pytest.fixture(scope="session")
def rail_dataset():
    dataset, report = load_dataset(fixture_path("rail_reference.csv"))
    assert report.ok
    return dataset


@pytest.fixture(scope="session")
def road_dataset():
    dataset, report = load_dataset(fixture_path("road_reference.csv"))
    assert report.ok
    return dataset


@pytest.fixture(scope="session")
def rail_class(rail_dataset):
    return build_class(
        rail_dataset,
        ClassFilter(
            metric=DeviationMetric.COST_OVERRUN,
            project_types=frozenset({"rail"}),
            stages=frozenset({"completed"}),
        ),
    )


@pytest.fixture(scope="session")
def road_class(road_dataset):
    return build_class(
        road_dataset,
        ClassFilter(metric=DeviationMetric.COST_OVERRUN, project_types=frozenset({"road"})),
    )
