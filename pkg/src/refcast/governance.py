"""Accountability checks: funding rules, risk sharing, bias diagnosis, appraisal.

Four loosely-coupled toolsets that operationalize how a funder keeps
project promoters honest:

* ``check_funding`` evaluates a funding structure against the UK
  transport rules — minimum local contribution (10%, or 25% for light
  rail), at least one third private risk capital without a sovereign
  guarantee, and risk transfer to the winning bidder.
* ``apportion_cost_increase`` splits a cost increase between the local
  promoter and the funder: 50/50 inside the ring-fenced risk allowance,
  all-local (with fresh approval) beyond it.
* ``classify`` places an organization on a learning-quality x
  incentive-alignment grid to say whether its forecasting errors are
  more likely self-delusion, strategic deception, both, or neither.
* ``npv`` / ``irr`` do the ex-post arithmetic that reveals what a
  project was actually worth once true costs and benefits are in.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import NamedTuple, Sequence

from .core import Money
from .errors import (
    InvalidValue,
    IoError,
    MultipleRootsWarning,
    NoRootInBracket,
    NoSignChange,
    ParseError,
)

RISK_CATEGORIES = ("construction", "operational", "climate")

LEARNING_FIELDS = ("problem_frequency", "feedback_speed", "feedback_clarity")
ALIGNMENT_FIELDS = (
    "interest_congruence",
    "information_symmetry",
    "risk_preference_match",
    "horizon_match",
    "accountability_clarity",
)

IRR_BRACKET = (-0.99, 10.0)
IRR_GRID_POINTS = 1100
IRR_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FundingStructure:
    """Who pays what, and who is on the hook when costs move."""

    gross_cost: Money
    local_contribution: Money
    private_capital_no_guarantee: Money
    is_light_rail: bool = False
    bidder_bears_overrun_risk: bool = False
    contract_bundled: bool = False

    def __post_init__(self) -> None:
        self.gross_cost.require_same_unit(self.local_contribution, "funding structure")
        self.gross_cost.require_same_unit(self.private_capital_no_guarantee, "funding structure")
        if self.gross_cost.amount <= 0:
            raise InvalidValue("gross cost must be positive")
        for name in ("local_contribution", "private_capital_no_guarantee"):
            part: Money = getattr(self, name)
            if part.amount > self.gross_cost.amount:
                raise InvalidValue(f"{name} exceeds the gross cost")


@dataclass(frozen=True)
class RiskRegisterEntry:
    description: str
    category: str
    owner: str
    transferable: bool = False

    def __post_init__(self) -> None:
        if self.category not in RISK_CATEGORIES:
            raise InvalidValue(
                f"risk category must be one of {RISK_CATEGORIES}, got {self.category!r}"
            )
        if not self.owner.strip():
            raise InvalidValue("every risk needs a named owner")


@dataclass(frozen=True)
class DiagnosticProfile:
    """Scores in [0, 1] describing the forecasting environment.

    Learning captures whether the organization can get better at
    estimating (similar problems recur often, feedback arrives quickly
    and is unambiguous). Alignment captures whether anyone gains from
    slanting the numbers (congruent interests, shared information,
    matched risk appetite and horizons, clear accountability).
    """

    problem_frequency: float
    feedback_speed: float
    feedback_clarity: float
    interest_congruence: float
    information_symmetry: float
    risk_preference_match: float
    horizon_match: float
    accountability_clarity: float
    name: str = ""

    def __post_init__(self) -> None:
        for field_name in LEARNING_FIELDS + ALIGNMENT_FIELDS:
            score = getattr(self, field_name)
            if not 0.0 <= score <= 1.0:
                raise InvalidValue(f"{field_name} must lie in [0, 1], got {score}")

    @property
    def learning_score(self) -> float:
        return math.fsum(getattr(self, f) for f in LEARNING_FIELDS) / len(LEARNING_FIELDS)

    @property
    def alignment_score(self) -> float:
        return math.fsum(getattr(self, f) for f in ALIGNMENT_FIELDS) / len(ALIGNMENT_FIELDS)

    @classmethod
    def from_json(cls, doc: dict, name: str = "") -> "DiagnosticProfile":
        scores: dict[str, float] = {}
        for group, field_names in (("learning", LEARNING_FIELDS), ("alignment", ALIGNMENT_FIELDS)):
            block = doc.get(group)
            if not isinstance(block, dict):
                raise ParseError(f"profile needs a {group!r} object with its sub-scores")
            for field_name in field_names:
                if field_name not in block:
                    raise ParseError(f"profile {group} block is missing {field_name!r}")
                try:
                    scores[field_name] = float(block[field_name])
                except (TypeError, ValueError) as exc:
                    raise ParseError(f"{field_name}: not a number: {block[field_name]!r}") from exc
        return cls(name=str(doc.get("name", name)), **scores)

    def to_json(self) -> dict:
        doc: dict = {
            "learning": {f: getattr(self, f) for f in LEARNING_FIELDS},
            "alignment": {f: getattr(self, f) for f in ALIGNMENT_FIELDS},
        }
        if self.name:
            doc["name"] = self.name
        return doc


class Quadrant(enum.Enum):
    UNBIASED = "unbiased"
    DELUSION_DOMINANT = "delusion_dominant"
    DECEPTION_DOMINANT = "deception_dominant"
    BOTH = "both"


@dataclass(frozen=True)
class CostIncreaseEvent:
    amount: Money
    cumulative_prior_increases: Money
    risk_allowance: Money

    def __post_init__(self) -> None:
        self.amount.require_same_unit(self.cumulative_prior_increases, "cost increase")
        self.amount.require_same_unit(self.risk_allowance, "cost increase")


@dataclass(frozen=True)
class Finding:
    """Outcome of one rule: passed True/False, or None for informational."""

    rule_id: str
    passed: bool | None
    detail: str

    @property
    def status(self) -> str:
        if self.passed is None:
            return "INFO"
        return "PASS" if self.passed else "FAIL"

    def to_json(self) -> dict:
        return {"rule": self.rule_id, "passed": self.passed, "detail": self.detail}


class ApportionResult(NamedTuple):
    local_share: Money
    funder_share: Money
    requires_new_approval: bool


def check_funding(structure: FundingStructure) -> list[Finding]:
    """Evaluate the four funding rules; every rule reported exactly once.

    Percentage thresholds are compared via integer cross-multiplication
    (local x 10 >= gross, etc.) so boundary cases are decided exactly.
    """
    findings: list[Finding] = []
    gross = structure.gross_cost.amount
    local = structure.local_contribution.amount

    if structure.is_light_rail:
        r1_ok = local * 4 >= gross
        r1_need = "25%"
    else:
        r1_ok = local * 10 >= gross
        r1_need = "10%"
    pct = local / gross * 100
    findings.append(
        Finding(
            "R1",
            bool(r1_ok),
            f"local contribution {pct:.2f}% of gross (minimum {r1_need}"
            f"{', light rail' if structure.is_light_rail else ''})",
        )
    )

    private = structure.private_capital_no_guarantee.amount
    r2_ok = private * 3 >= gross
    findings.append(
        Finding(
            "R2",
            bool(r2_ok),
            f"private risk capital without sovereign guarantee "
            f"{private / gross * 100:.2f}% of gross (minimum one third)",
        )
    )

    findings.append(
        Finding(
            "R3",
            structure.bidder_bears_overrun_risk,
            "winning bidder carries construction cost overrun risk"
            if structure.bidder_bears_overrun_risk
            else "cost overrun risk stays with the promoter; transfer it to the bidder",
        )
    )

    findings.append(
        Finding(
            "R4",
            None,
            "contract bundles build with operation and maintenance"
            if structure.contract_bundled
            else "contract is build-only; bundling operation would reward lifecycle honesty",
        )
    )
    return findings


def apportion_cost_increase(event: CostIncreaseEvent) -> ApportionResult:
    """Split a cost increase between promoter and funder.

    The slice of the increase that still fits under the risk allowance
    (after prior increases have eaten into it) is shared 50/50 and needs
    no fresh approval; anything beyond the allowance is entirely the
    promoter's and does.
    """
    zero = event.amount * 0
    headroom = event.risk_allowance.amount - event.cumulative_prior_increases.amount
    if headroom < 0:
        headroom = Decimal(0)
    within = min(event.amount.amount, headroom)
    excess = event.amount.amount - within
    half = within * Decimal("0.5")
    local = Money(half + excess, event.amount.currency, event.amount.basis)
    funder = Money(half, event.amount.currency, event.amount.basis)
    assert (local + funder).amount == event.amount.amount
    if event.amount.amount == 0:
        return ApportionResult(zero, zero, False)
    return ApportionResult(local, funder, excess > 0)


def classify(
    profile: DiagnosticProfile, thresholds: tuple[float, float] = (0.5, 0.5)
) -> Quadrant:
    """Place a profile on the learning x alignment grid.

    Scores exactly at a threshold count as good/aligned. Poor learning
    with aligned incentives points to honest self-delusion; good
    learning with misaligned incentives points to deliberate deception.
    """
    t_learning, t_alignment = thresholds
    for t in (t_learning, t_alignment):
        if not 0.0 <= t <= 1.0:
            raise InvalidValue(f"thresholds must lie in [0, 1], got {t}")
    learned = profile.learning_score >= t_learning
    aligned = profile.alignment_score >= t_alignment
    if learned and aligned:
        return Quadrant.UNBIASED
    if not learned and aligned:
        return Quadrant.DELUSION_DOMINANT
    if learned and not aligned:
        return Quadrant.DECEPTION_DOMINANT
    return Quadrant.BOTH


def validate_risk_register(entries: Sequence[RiskRegisterEntry]) -> list[Finding]:
    """Check the register covers construction, operational and climate risks.

    Ownership is already a construction invariant of the entry type, so
    the ownership finding here can only report how many owners there are.
    """
    findings: list[Finding] = []
    present = {entry.category for entry in entries}
    for category in RISK_CATEGORIES:
        count = sum(1 for e in entries if e.category == category)
        findings.append(
            Finding(
                f"coverage-{category}",
                category in present,
                f"{count} {category} risk(s) registered"
                if count
                else f"no {category} risk registered; the category is mandatory",
            )
        )
    owners = sorted({entry.owner for entry in entries})
    findings.append(
        Finding(
            "ownership",
            bool(entries),
            f"{len(entries)} risk(s) owned by {len(owners)} distinct owner(s)"
            if entries
            else "register is empty",
        )
    )
    return findings


def findings_table(findings: Sequence[Finding]) -> str:
    """Fixed-width human-readable table of findings."""
    rule_width = max((len(f.rule_id) for f in findings), default=4)
    rule_width = max(rule_width, len("rule"))
    lines = [f"{'rule':<{rule_width}}  {'status':<6}  detail"]
    for f in findings:
        lines.append(f"{f.rule_id:<{rule_width}}  {f.status:<6}  {f.detail}")
    return "\n".join(lines) + "\n"


def _check_cashflows(cashflows: Sequence[tuple[int, float]]) -> list[tuple[int, float]]:
    cleaned: list[tuple[int, float]] = []
    for period, amount in cashflows:
        if int(period) != period or period < 0:
            raise InvalidValue(f"period must be a nonnegative integer, got {period!r}")
        amount = float(amount)
        if not math.isfinite(amount):
            raise InvalidValue(f"cashflow at period {period} is not finite")
        cleaned.append((int(period), amount))
    if not cleaned:
        raise InvalidValue("no cashflows given")
    return sorted(cleaned)


def _npv_raw(flows: Sequence[tuple[int, float]], rate: float) -> float:
    return math.fsum(amount / (1.0 + rate) ** period for period, amount in flows)


def npv(cashflows: Sequence[tuple[int, float]], rate: float) -> float:
    """Net present value: sum of cf_t / (1 + rate)^t."""
    if not rate > -1:
        raise InvalidValue(f"discount rate must exceed -1, got {rate}")
    return _npv_raw(_check_cashflows(cashflows), rate)


def irr(cashflows: Sequence[tuple[int, float]], tolerance: float = IRR_TOLERANCE) -> float:
    """Internal rate of return by grid bracketing plus bisection.

    Scans (-0.99, 10) for sign changes of the NPV, bisects each bracket,
    and returns the root nearest zero; more than one root raises a
    warning and still returns the nearest. The tolerance applies to the
    NPV normalized by the total absolute cashflow, so it is scale-free.
    """
    flows = _check_cashflows(cashflows)
    signs = [a > 0 for _, a in flows if a != 0]
    if not signs or all(signs) or not any(signs):
        raise NoSignChange("cashflows never change sign, so no rate balances them")

    scale = math.fsum(abs(a) for _, a in flows)
    lo, hi = IRR_BRACKET
    grid = [lo + (hi - lo) * i / (IRR_GRID_POINTS - 1) for i in range(IRR_GRID_POINTS)]
    values = [_npv_raw(flows, r) for r in grid]

    roots: list[float] = []
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            roots.append(grid[i])
            continue
        if a * b < 0:
            roots.append(_bisect_npv(flows, grid[i], grid[i + 1]))
    if values[-1] == 0.0:
        roots.append(grid[-1])

    if not roots:
        raise NoRootInBracket(
            f"no rate in ({lo}, {hi}) balances the cashflows; NPV never crosses zero"
        )
    if len(roots) > 1:
        warnings.warn(
            f"{len(roots)} internal rates balance these cashflows: "
            f"{', '.join(f'{r:.4f}' for r in roots)}; reporting the one nearest zero",
            MultipleRootsWarning,
            stacklevel=2,
        )
    best = min(roots, key=abs)
    if abs(_npv_raw(flows, best)) >= tolerance * scale:
        raise NoRootInBracket("bisection failed to reach the requested tolerance")
    return best


def _bisect_npv(flows: list[tuple[int, float]], lo: float, hi: float) -> float:
    f_lo = _npv_raw(flows, lo)
    if f_lo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or hi - lo < 1e-13:
            break
        f_mid = _npv_raw(flows, mid)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def load_profile(path: str | Path, name: str | None = None) -> DiagnosticProfile:
    """Read a diagnostic profile from JSON.

    The file holds either a single profile object or a mapping of
    profile names to objects, in which case ``name`` selects one.
    """
    doc = read_json_doc(path)
    if "learning" in doc and "alignment" in doc:
        if name is not None:
            raise ParseError(f"{path} holds a single profile; --name does not apply")
        return DiagnosticProfile.from_json(doc)
    if name is None:
        available = ", ".join(sorted(doc)) or "none"
        raise ParseError(
            f"{path} holds multiple profiles; pick one by name (available: {available})"
        )
    if name not in doc:
        available = ", ".join(sorted(doc)) or "none"
        raise ParseError(f"{path} has no profile {name!r} (available: {available})")
    return DiagnosticProfile.from_json(doc[name], name=name)


def load_profiles(path: str | Path) -> dict[str, DiagnosticProfile]:
    """Read a mapping of named profiles from JSON."""
    doc = read_json_doc(path)
    if "learning" in doc and "alignment" in doc:
        profile = DiagnosticProfile.from_json(doc)
        return {profile.name or "profile": profile}
    return {n: DiagnosticProfile.from_json(p, name=n) for n, p in doc.items()}


def load_funding(path: str | Path) -> FundingStructure:
    """Read a funding structure from JSON.

    Expected shape::

        {"gross_cost": {"amount": "500", "currency": "GBP", "basis": ...},
         "local_contribution": {...}, "private_capital_no_guarantee": {...},
         "is_light_rail": false, "bidder_bears_overrun_risk": true,
         "contract_bundled": false}
    """
    doc = read_json_doc(path)
    money_fields = ("gross_cost", "local_contribution", "private_capital_no_guarantee")
    kwargs: dict = {}
    for field_name in money_fields:
        if field_name not in doc:
            raise ParseError(f"funding structure is missing {field_name!r}")
        try:
            kwargs[field_name] = Money.from_json(doc[field_name])
        except Exception as exc:
            raise ParseError(f"{field_name}: {exc}") from exc
    for flag in ("is_light_rail", "bidder_bears_overrun_risk", "contract_bundled"):
        kwargs[flag] = bool(doc.get(flag, False))
    return FundingStructure(**kwargs)


def read_json_doc(path: str | Path, allow_list: bool = False):
    """Read a JSON file, wrapping failures in this package's exceptions."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if isinstance(doc, dict) or (allow_list and isinstance(doc, list)):
        return doc
    expected = "object or array" if allow_list else "object"
    raise ParseError(f"{path}: expected a JSON {expected}")


def load_register(path: str | Path) -> list[RiskRegisterEntry]:
    """Read risk register entries from JSON (bare array or {"entries": []})."""
    doc = read_json_doc(path, allow_list=True)
    raw = doc.get("entries") if isinstance(doc, dict) else doc
    if not isinstance(raw, list):
        raise ParseError(f"{path}: expected an array of register entries")
    entries = []
    for i, obj in enumerate(raw, start=1):
        if not isinstance(obj, dict):
            raise ParseError(f"{path}: entry #{i} is not an object")
        entries.append(
            RiskRegisterEntry(
                description=str(obj.get("description", "")),
                category=str(obj.get("category", "")),
                owner=str(obj.get("owner", "")),
                transferable=bool(obj.get("transferable", False)),
            )
        )
    return entries


def load_cashflows(path: str | Path) -> list[tuple[int, float]]:
    """Read a cashflow schedule from JSON.

    Accepts a bare array of [period, amount] pairs or an object with a
    "cashflows" key holding one.
    """
    doc = read_json_doc(path, allow_list=True)
    raw = doc.get("cashflows") if isinstance(doc, dict) else doc
    if not isinstance(raw, list):
        raise ParseError(f"{path}: expected an array of [period, amount] pairs")
    flows = []
    for i, pair in enumerate(raw, start=1):
        try:
            period, amount = pair
            flows.append((int(period), float(amount)))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: cashflow #{i} malformed: {exc}") from exc
    return flows
