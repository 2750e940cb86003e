"""Flat-file ingestion: read, validate, and persist project datasets.

The CSV schema is fixed: one header row with the columns in
:data:`CSV_COLUMNS`, UTF-8, comma separated, RFC-style quoting. A leading
``# schema_version=N`` comment line is tolerated and stripped. Missing
numeric cells are empty strings, never 0 (a zero forecast is invalid
data, not absent data). Unknown columns are preserved verbatim as string
attributes on the record. The JSON form is an object
``{"schema_version": N, "records": [...]}`` whose record objects use the
same field names as the CSV columns; a bare array is accepted on load.

Validation is total: no record enters a Dataset without satisfying every
record invariant, and a dataset with any erroneous row is rejected
wholesale with a report listing each violation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Sequence

from .core import Money, PriceBasis, ProjectRecord, STAGES, to_decimal
from .errors import IoError, ParseError, RefcastError

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "id",
    "project_type",
    "stage",
    "year",
    "currency",
    "price_basis",
    "base_year",
    "forecast_cost",
    "actual_cost",
    "benefit_unit",
    "forecast_benefit",
    "actual_benefit",
    "forecast_duration_days",
    "actual_duration_days",
    "regime_tags",
)

# overrun fractions beyond this are flagged as suspicious, not rejected:
# 13.57x (Sydney Opera House) is real data.
SUSPICIOUS_OVERRUN = 20.0


@dataclass(frozen=True)
class Issue:
    """One validation finding: which record, which field, what is wrong."""

    record_id: str
    field: str
    message: str

    def __str__(self) -> str:
        where = self.record_id or "<dataset>"
        return f"{where}.{self.field}: {self.message}" if self.field else f"{where}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Issue, ...] = ()
    warnings: tuple[Issue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json(self) -> dict:
        as_row = lambda i: {"record_id": i.record_id, "field": i.field, "message": i.message}
        return {
            "ok": self.ok,
            "errors": [as_row(i) for i in self.errors],
            "warnings": [as_row(i) for i in self.warnings],
        }

    def __str__(self) -> str:
        lines = [f"errors: {len(self.errors)}, warnings: {len(self.warnings)}"]
        lines += [f"  error   {i}" for i in self.errors]
        lines += [f"  warning {i}" for i in self.warnings]
        return "\n".join(lines)


@dataclass(frozen=True)
class Dataset:
    """A validated, ordered collection of project records."""

    records: tuple[ProjectRecord, ...]
    source: str = ""
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


class _RowErrors(Exception):
    def __init__(self, issues: list[Issue]):
        self.issues = issues


def _parse_int(raw: str, row_id: str, field_name: str, issues: list[Issue]) -> int | None:
    if raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        issues.append(Issue(row_id, field_name, f"not an integer: {raw!r}"))
        return None


def _parse_decimal(raw: str, row_id: str, field_name: str, issues: list[Issue]) -> Decimal | None:
    if raw == "":
        return None
    try:
        return Decimal(raw)
    except InvalidOperation:
        issues.append(Issue(row_id, field_name, f"not a number: {raw!r}"))
        return None


def record_from_cells(cells: dict[str, str], position: int) -> ProjectRecord:
    """Build one record from string cells; raises _RowErrors listing faults."""
    issues: list[Issue] = []
    row_id = cells.get("id", "").strip() or f"<row {position}>"
    if not cells.get("id", "").strip():
        issues.append(Issue(row_id, "id", "missing id"))

    project_type = cells.get("project_type", "").strip()
    if not project_type:
        issues.append(Issue(row_id, "project_type", "missing project type"))

    stage = cells.get("stage", "").strip()
    if stage not in STAGES:
        issues.append(Issue(row_id, "stage", f"unknown stage {stage!r}, expected one of {STAGES}"))

    year = _parse_int(cells.get("year", ""), row_id, "year", issues)
    if year is None and not any(i.field == "year" for i in issues):
        issues.append(Issue(row_id, "year", "missing year"))

    currency = cells.get("currency", "").strip()
    if not currency:
        issues.append(Issue(row_id, "currency", "missing currency"))

    basis_kind = cells.get("price_basis", "").strip()
    base_year = _parse_int(cells.get("base_year", ""), row_id, "base_year", issues)
    basis: PriceBasis | None = None
    try:
        basis = PriceBasis(basis_kind, base_year)
    except RefcastError as exc:
        issues.append(Issue(row_id, "price_basis", str(exc)))

    forecast_amount = _parse_decimal(cells.get("forecast_cost", ""), row_id, "forecast_cost", issues)
    if forecast_amount is None and not any(i.field == "forecast_cost" for i in issues):
        issues.append(Issue(row_id, "forecast_cost", "missing forecast cost"))
    elif forecast_amount is not None and forecast_amount <= 0:
        issues.append(Issue(row_id, "forecast_cost", f"must be > 0, got {forecast_amount}"))
        forecast_amount = None

    actual_amount = _parse_decimal(cells.get("actual_cost", ""), row_id, "actual_cost", issues)
    if actual_amount is not None and actual_amount < 0:
        issues.append(Issue(row_id, "actual_cost", f"must be non-negative, got {actual_amount}"))
        actual_amount = None

    benefit_unit = cells.get("benefit_unit", "").strip() or None
    forecast_benefit = _parse_decimal(cells.get("forecast_benefit", ""), row_id, "forecast_benefit", issues)
    actual_benefit = _parse_decimal(cells.get("actual_benefit", ""), row_id, "actual_benefit", issues)

    forecast_days = _parse_int(cells.get("forecast_duration_days", ""), row_id, "forecast_duration_days", issues)
    actual_days = _parse_int(cells.get("actual_duration_days", ""), row_id, "actual_duration_days", issues)

    tags_raw = cells.get("regime_tags", "")
    regime_tags = frozenset(t.strip() for t in tags_raw.split(";") if t.strip())

    extra = {
        key: value
        for key, value in cells.items()
        if key not in CSV_COLUMNS and value not in ("", None)
    }

    if issues:
        raise _RowErrors(issues)

    assert basis is not None and forecast_amount is not None and year is not None
    try:
        return ProjectRecord(
            id=cells["id"].strip(),
            project_type=project_type,
            stage=stage,
            year=year,
            forecast_cost=Money(forecast_amount, currency, basis),
            actual_cost=Money(actual_amount, currency, basis) if actual_amount is not None else None,
            benefit_unit=benefit_unit,
            forecast_benefit=forecast_benefit,
            actual_benefit=actual_benefit,
            forecast_duration_days=forecast_days,
            actual_duration_days=actual_days,
            regime_tags=regime_tags,
            extra=extra,
        )
    except RefcastError as exc:
        raise _RowErrors([Issue(row_id, "", str(exc))]) from exc


def record_to_cells(record: ProjectRecord) -> dict[str, str]:
    """Flatten a record back to canonical string cells."""
    cells = {
        "id": record.id,
        "project_type": record.project_type,
        "stage": record.stage,
        "year": str(record.year),
        "currency": record.forecast_cost.currency,
        "price_basis": record.forecast_cost.basis.kind,
        "base_year": (
            "" if record.forecast_cost.basis.base_year is None
            else str(record.forecast_cost.basis.base_year)
        ),
        "forecast_cost": str(record.forecast_cost.amount),
        "actual_cost": "" if record.actual_cost is None else str(record.actual_cost.amount),
        "benefit_unit": record.benefit_unit or "",
        "forecast_benefit": "" if record.forecast_benefit is None else str(record.forecast_benefit),
        "actual_benefit": "" if record.actual_benefit is None else str(record.actual_benefit),
        "forecast_duration_days": (
            "" if record.forecast_duration_days is None else str(record.forecast_duration_days)
        ),
        "actual_duration_days": (
            "" if record.actual_duration_days is None else str(record.actual_duration_days)
        ),
        "regime_tags": ";".join(sorted(record.regime_tags)),
    }
    for key in sorted(record.extra):
        cells[key] = record.extra[key]
    return cells


def validate_rows(rows: Iterable[dict[str, str]]) -> tuple[list[ProjectRecord], ValidationReport]:
    """Validate parsed rows; returns accepted records and the full report."""
    records: list[ProjectRecord] = []
    errors: list[Issue] = []
    warnings: list[Issue] = []
    seen: set[str] = set()
    for position, cells in enumerate(rows, start=1):
        try:
            record = record_from_cells(cells, position)
        except _RowErrors as exc:
            errors.extend(exc.issues)
            continue
        if record.id in seen:
            errors.append(Issue(record.id, "id", "duplicate id"))
            continue
        seen.add(record.id)
        if record.actual_cost is not None:
            over = (record.actual_cost.amount - record.forecast_cost.amount) / record.forecast_cost.amount
            if over > SUSPICIOUS_OVERRUN:
                warnings.append(
                    Issue(record.id, "actual_cost", f"overrun {over:.1f}x forecast looks suspicious")
                )
        records.append(record)
    if not errors and not records:
        warnings.append(Issue("", "", "empty dataset"))
    return records, ValidationReport(tuple(errors), tuple(warnings))


def _read_csv(path: Path) -> tuple[list[dict[str, str]], int]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    version = SCHEMA_VERSION
    lines = text.splitlines(keepends=True)
    if lines and lines[0].startswith("#"):
        comment = lines[0].lstrip("#").strip()
        if comment.startswith("schema_version="):
            try:
                version = int(comment.split("=", 1)[1])
            except ValueError:
                raise ParseError(f"bad schema_version comment: {lines[0].strip()!r}")
        lines = lines[1:]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None:
        raise ParseError(f"{path}: empty file, expected a header row")
    missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ParseError(f"{path}: missing required columns {missing}")
    rows = []
    for raw in reader:
        if None in raw:
            raise ParseError(f"{path}: row has more cells than the header")
        rows.append({k: (v if v is not None else "") for k, v in raw.items()})
    return rows, version


def _record_to_json_obj(record: ProjectRecord) -> dict:
    cells = record_to_cells(record)
    obj: dict = {}
    for key in CSV_COLUMNS:
        value = cells[key]
        if value == "" and key not in ("regime_tags",):
            continue  # absent fields stay absent, not zero
        if key in ("year", "base_year", "forecast_duration_days", "actual_duration_days"):
            obj[key] = int(value)
        elif key == "regime_tags":
            obj[key] = sorted(record.regime_tags)
        else:
            obj[key] = value
    for key in sorted(record.extra):
        obj[key] = record.extra[key]
    return obj


def _json_obj_to_cells(obj: dict, position: int) -> dict[str, str]:
    if not isinstance(obj, dict):
        raise ParseError(f"record #{position}: expected an object, got {type(obj).__name__}")
    cells: dict[str, str] = {}
    for key, value in obj.items():
        if key == "regime_tags":
            if isinstance(value, list):
                cells[key] = ";".join(str(v) for v in value)
            else:
                cells[key] = str(value)
        elif value is None:
            cells[key] = ""
        else:
            cells[key] = str(value)
    for column in CSV_COLUMNS:
        cells.setdefault(column, "")
    return cells


def _read_json(path: Path) -> tuple[list[dict[str, str]], int]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(doc, list):
        version, items = SCHEMA_VERSION, doc
    elif isinstance(doc, dict) and isinstance(doc.get("records"), list):
        version = int(doc.get("schema_version", SCHEMA_VERSION))
        items = doc["records"]
    else:
        raise ParseError(f"{path}: expected a record array or {{schema_version, records}} object")
    return [_json_obj_to_cells(obj, i) for i, obj in enumerate(items, start=1)], version


def infer_format(path: str | Path) -> str:
    return "json" if str(path).lower().endswith(".json") else "csv"


def load_dataset(
    path: str | Path, format: str | None = None
) -> tuple[Dataset | None, ValidationReport]:
    """Load and validate a dataset file.

    Returns ``(dataset, report)``; the dataset is None exactly when the
    report contains errors (acceptance <=> no errors). Malformed files
    raise :class:`ParseError`; unreadable paths raise :class:`IoError`.
    """
    path = Path(path)
    fmt = format or infer_format(path)
    if fmt == "csv":
        rows, version = _read_csv(path)
    elif fmt == "json":
        rows, version = _read_json(path)
    else:
        raise ParseError(f"unknown format {fmt!r}, expected csv or json")
    records, report = validate_rows(rows)
    if not report.ok:
        return None, report
    return Dataset(tuple(records), source=str(path), schema_version=version), report


def save_dataset(dataset: Dataset, path: str | Path, format: str | None = None) -> None:
    """Write a dataset in canonical form; load(save(d)) reproduces d."""
    path = Path(path)
    fmt = format or infer_format(path)
    if fmt == "csv":
        extra_columns = sorted({key for r in dataset.records for key in r.extra})
        header = list(CSV_COLUMNS) + extra_columns
        try:
            with path.open("w", encoding="utf-8", newline="") as handle:
                handle.write(f"# schema_version={dataset.schema_version}\n")
                writer = csv.DictWriter(handle, fieldnames=header, lineterminator="\n")
                writer.writeheader()
                for record in dataset.records:
                    cells = record_to_cells(record)
                    writer.writerow({col: cells.get(col, "") for col in header})
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
    elif fmt == "json":
        doc = {
            "schema_version": dataset.schema_version,
            "records": [_record_to_json_obj(r) for r in dataset.records],
        }
        try:
            path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
    else:
        raise ParseError(f"unknown format {fmt!r}, expected csv or json")


def dataset_from_records(records: Sequence[ProjectRecord], source: str = "") -> Dataset:
    """Assemble a dataset in memory, enforcing id uniqueness."""
    seen: set[str] = set()
    duplicates = []
    for record in records:
        if record.id in seen:
            duplicates.append(Issue(record.id, "id", "duplicate id"))
        seen.add(record.id)
    if duplicates:
        from .errors import DatasetInvalid

        raise DatasetInvalid(ValidationReport(tuple(duplicates)))
    return Dataset(tuple(records), source=source)
