"""Dataset loading, validation reports, and save/load round-trips."""

from __future__ import annotations

import json

import pytest

from refcast import Dataset, dataset_from_records, fixture_path, load_dataset, save_dataset
from refcast.errors import DatasetInvalid, IoError, ParseError
from refcast.ingest import CSV_COLUMNS, infer_format
from tests.conftest import make_record

FIXTURE_SIZES = {
    "rail_reference.csv": 46,
    "road_reference.csv": 50,
    "urban_rail.csv": 44,
    "pioneer_plants.csv": 44,
}


@pytest.mark.parametrize("name,expected", sorted(FIXTURE_SIZES.items()))
def test_bundled_fixtures_load_clean(name, expected):
    dataset, report = load_dataset(fixture_path(name))
    assert report.ok and not report.warnings
    assert len(dataset) == expected


def _sample_dataset() -> Dataset:
    """Mix of minimal and fully-populated records, plus an extra column."""
    records = [
        make_record("min-1", actual=None),  # every optional absent
        make_record(
            "full-1",
            forecast="123.45",
            actual="200",
            benefit_unit="riders/day",
            forecast_benefit="85000",
            actual_benefit="42500.5",
            forecast_duration_days=600,
            actual_duration_days=811,
            regime_tags={"uk", "devolved"},
            extra={"note": "tunnel section"},
        ),
        make_record("nom-1", forecast="9", actual="9", currency="EUR", base_year=1995),
    ]
    return dataset_from_records(records, source="unit-test")


@pytest.mark.parametrize("suffix", ["csv", "json"])
def test_save_load_round_trip(tmp_path, suffix):
    original = _sample_dataset()
    path = tmp_path / f"roundtrip.{suffix}"
    save_dataset(original, path)
    loaded, report = load_dataset(path)
    assert report.ok
    assert loaded.records == original.records
    assert loaded.schema_version == original.schema_version


def test_round_trip_is_idempotent(tmp_path):
    # save(load(save(d))) produces byte-identical files
    original = _sample_dataset()
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    save_dataset(original, first)
    loaded, _ = load_dataset(first)
    save_dataset(loaded, second)
    assert first.read_text() == second.read_text()


def test_csv_has_schema_comment_and_header(tmp_path):
    path = tmp_path / "d.csv"
    save_dataset(_sample_dataset(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1].split(",")[: len(CSV_COLUMNS)] == list(CSV_COLUMNS)


def test_json_shape(tmp_path):
    path = tmp_path / "d.json"
    save_dataset(_sample_dataset(), path)
    doc = json.loads(path.read_text())
    assert doc["schema_version"] == 1
    assert len(doc["records"]) == 3
    # absent optionals stay absent rather than appearing as 0 or null
    assert "actual_cost" not in doc["records"][0]
    assert doc["records"][1]["regime_tags"] == ["devolved", "uk"]


def test_json_bare_array_accepted(tmp_path):
    path = tmp_path / "d.json"
    save_dataset(_sample_dataset(), path)
    records = json.loads(path.read_text())["records"]
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps(records))
    loaded, report = load_dataset(bare)
    assert report.ok
    assert loaded.records == _sample_dataset().records


def test_duplicate_ids_rejected(tmp_path):
    path = tmp_path / "dup.csv"
    save_dataset(dataset_from_records([make_record("a"), make_record("b")]), path)
    text = path.read_text().replace("b,rail", "a,rail")
    path.write_text(text)
    dataset, report = load_dataset(path)
    assert dataset is None
    assert any(i.field == "id" and "duplicate" in i.message for i in report.errors)


def test_invalid_rows_collected_not_raised(tmp_path):
    header = "# schema_version=1\n" + ",".join(CSV_COLUMNS) + "\n"
    rows = [
        "ok-1,rail,completed,2000,GBP,constant,2002,100,140,,,,,,uk",
        "bad-stage,rail,built,2000,GBP,constant,2002,100,140,,,,,,",
        "bad-cost,rail,completed,2000,GBP,constant,2002,0,140,,,,,,",
        ",rail,completed,2000,GBP,constant,2002,100,140,,,,,,",
    ]
    path = tmp_path / "mixed.csv"
    path.write_text(header + "\n".join(rows) + "\n")
    dataset, report = load_dataset(path)
    assert dataset is None
    fields = {(i.record_id, i.field) for i in report.errors}
    assert ("bad-stage", "stage") in fields
    assert ("bad-cost", "forecast_cost") in fields
    assert ("<row 4>", "id") in fields


def test_suspicious_overrun_warns_but_loads(tmp_path):
    path = tmp_path / "big.csv"
    save_dataset(
        dataset_from_records([make_record("boom", forecast="1", actual="30")]), path
    )
    dataset, report = load_dataset(path)
    assert dataset is not None
    assert len(report.warnings) == 1
    assert "suspicious" in report.warnings[0].message


def test_empty_dataset_warns(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("# schema_version=1\n" + ",".join(CSV_COLUMNS) + "\n")
    dataset, report = load_dataset(path)
    assert dataset is not None and len(dataset) == 0
    assert any("empty dataset" in i.message for i in report.warnings)


def test_missing_columns_raise(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("id,project_type\nx,rail\n")
    with pytest.raises(ParseError, match="missing required columns"):
        load_dataset(path)


def test_row_longer_than_header(tmp_path):
    path = tmp_path / "wide.csv"
    path.write_text(
        ",".join(CSV_COLUMNS)
        + "\n"
        + "a,rail,completed,2000,GBP,constant,2002,100,140,,,,,,uk,EXTRA\n"
    )
    with pytest.raises(ParseError, match="more cells"):
        load_dataset(path)


def test_empty_file_raises(tmp_path):
    path = tmp_path / "void.csv"
    path.write_text("")
    with pytest.raises(ParseError):
        load_dataset(path)


def test_bad_schema_comment(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# schema_version=two\n" + ",".join(CSV_COLUMNS) + "\n")
    with pytest.raises(ParseError, match="schema_version"):
        load_dataset(path)


def test_invalid_json_raises(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ParseError, match="invalid JSON"):
        load_dataset(path)


def test_missing_file_raises_io(tmp_path):
    with pytest.raises(IoError):
        load_dataset(tmp_path / "nope.csv")


def test_unknown_format(tmp_path):
    with pytest.raises(ParseError, match="unknown format"):
        load_dataset(tmp_path / "x.csv", format="xml")


def test_infer_format():
    assert infer_format("data.json") == "json"
    assert infer_format("data.JSON") == "json"
    assert infer_format("data.csv") == "csv"
    assert infer_format("data") == "csv"


def test_extra_columns_preserved(tmp_path):
    path = tmp_path / "extra.csv"
    save_dataset(_sample_dataset(), path)
    loaded, _ = load_dataset(path)
    by_id = {r.id: r for r in loaded}
    assert by_id["full-1"].extra == {"note": "tunnel section"}
    assert by_id["min-1"].extra == {}


def test_dataset_from_records_rejects_duplicates():
    with pytest.raises(DatasetInvalid) as exc_info:
        dataset_from_records([make_record("a"), make_record("a")])
    assert not exc_info.value.report.ok


def test_fixture_path_unknown_name():
    with pytest.raises(IoError, match="rail_reference.csv"):
        fixture_path("no_such_fixture.csv")
