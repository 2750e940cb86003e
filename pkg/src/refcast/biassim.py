"""Synthetic project populations with dialed-in delusion and deception.

The generator produces projects whose forecasts are corrupted the way
the literature says real ones are: estimates anchor on a first low
number and adjust insufficiently, optimism scales them down, and
competitive pressure shaves them further. Per project:

    C      ~ lognormal(log_mean, log_stdev)          true cost
    anchor = delta * C * noise_1                      first low estimate
    update = delta * C * noise_2                      re-estimate
    F0     = anchor + a * (update - anchor)           insufficient adjustment
    F      = F0 * (1 - s * competition)               strategic shave
    o      = (C - F) / F                              realized overrun

with multiplicative lognormal(0, noise_stdev) estimation noise (median
1, so noise alone adds no systematic bias). ``anchor_passthrough``
short-circuits F0 = update, the a -> 1 limit, for clean bias-free runs.

Each trial splits its projects in half, builds the uplift from the
first half's overruns, and scores the second half: the headline check
is whether budgets set at acceptable risk p really are exceeded a
fraction p of the time. That closes the loop on the whole pipeline —
biased forecasts in, calibrated budgets out.

Determinism: every trial draws from its own substream seeded by
(seed, trial index), and results aggregate in trial order, so the
output is bit-identical no matter how trials would be scheduled.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .engine import estimate_reliability
from .errors import (
    ClampedCorrelationWarning,
    InvalidValue,
    IoError,
    NegativeUpliftWarning,
    ParseError,
)
from .refclass import empirical_uplift

DEFAULT_PERCENTILES = (0.5, 0.2, 0.1)

# realized overruns kept in the result (full runs can produce millions)
SAMPLE_CAP = 100_000


@dataclass(frozen=True)
class BiasParams:
    """Forecast corruption knobs; the defaults are an honest forecaster."""

    optimism_multiplier: float = 1.0
    anchor_weight: float = 0.0
    strategic_shave: float = 0.0
    competition_intensity: float = 1.0
    anchor_passthrough: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.optimism_multiplier <= 1.0:
            raise InvalidValue(
                f"optimism multiplier must lie in (0, 1], got {self.optimism_multiplier}"
            )
        if not 0.0 <= self.anchor_weight < 1.0:
            raise InvalidValue(f"anchor weight must lie in [0, 1), got {self.anchor_weight}")
        if not 0.0 <= self.strategic_shave < 1.0:
            raise InvalidValue(f"strategic shave must lie in [0, 1), got {self.strategic_shave}")
        if not 0.0 <= self.competition_intensity <= 1.0:
            raise InvalidValue(
                f"competition intensity must lie in [0, 1], got {self.competition_intensity}"
            )

    def to_json(self) -> dict:
        return {
            "optimism_multiplier": self.optimism_multiplier,
            "anchor_weight": self.anchor_weight,
            "strategic_shave": self.strategic_shave,
            "competition_intensity": self.competition_intensity,
            "anchor_passthrough": self.anchor_passthrough,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BiasParams":
        known = {
            "optimism_multiplier",
            "anchor_weight",
            "strategic_shave",
            "competition_intensity",
            "anchor_passthrough",
        }
        unknown = set(doc) - known
        if unknown:
            raise ParseError(f"unknown bias parameter(s): {', '.join(sorted(unknown))}")
        return cls(**doc)


@dataclass(frozen=True)
class SimConfig:
    n_projects: int
    trials: int
    seed: int
    log_mean: float
    log_stdev: float
    noise_stdev: float
    bias: BiasParams
    debias: bool = True
    percentiles: tuple[float, ...] = DEFAULT_PERCENTILES

    def __post_init__(self) -> None:
        if self.n_projects < 1:
            raise InvalidValue(f"n_projects must be at least 1, got {self.n_projects}")
        if self.trials < 1:
            raise InvalidValue(f"trials must be at least 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise InvalidValue("seed must fit in 64 unsigned bits")
        if self.log_stdev < 0:
            raise InvalidValue(f"log_stdev must be nonnegative, got {self.log_stdev}")
        if self.noise_stdev < 0:
            raise InvalidValue(f"noise_stdev must be nonnegative, got {self.noise_stdev}")
        object.__setattr__(self, "percentiles", tuple(self.percentiles))
        if not self.percentiles:
            raise InvalidValue("at least one percentile is required")
        for p in self.percentiles:
            if not 0 < p < 1:
                raise InvalidValue(f"percentiles must lie inside (0, 1), got {p}")

    def to_json(self) -> dict:
        return {
            "n_projects": self.n_projects,
            "trials": self.trials,
            "seed": self.seed,
            "true_cost_distribution": {"log_mean": self.log_mean, "log_stdev": self.log_stdev},
            "noise_stdev": self.noise_stdev,
            "bias": self.bias.to_json(),
            "debias": self.debias,
            "percentiles": list(self.percentiles),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SimConfig":
        try:
            dist = doc["true_cost_distribution"]
            return cls(
                n_projects=int(doc["n_projects"]),
                trials=int(doc["trials"]),
                seed=int(doc["seed"]),
                log_mean=float(dist["log_mean"]),
                log_stdev=float(dist["log_stdev"]),
                noise_stdev=float(doc["noise_stdev"]),
                bias=BiasParams.from_json(doc.get("bias", {})),
                debias=bool(doc.get("debias", True)),
                percentiles=tuple(doc.get("percentiles", DEFAULT_PERCENTILES)),
            )
        except KeyError as exc:
            raise ParseError(f"simulation config is missing {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ParseError(f"simulation config malformed: {exc}") from exc


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    mean_overrun: float
    uplift_calibration: tuple[tuple[float, float], ...]
    regression_error: float
    realized_overruns: tuple[float, ...]
    n_projects_total: int

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "mean_overrun": self.mean_overrun,
            "uplift_calibration": [[p, rate] for p, rate in self.uplift_calibration],
            "regression_error": self.regression_error,
            "n_projects_total": self.n_projects_total,
            "realized_overruns": list(self.realized_overruns),
        }

    def save(self, path: str | Path) -> None:
        try:
            Path(path).write_text(
                json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8"
            )
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc


class CalibrationRow(NamedTuple):
    p: float
    target: float
    empirical: float
    tolerance: float
    within_tolerance: bool


def load_config(path: str | Path) -> SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    return SimConfig.from_json(doc)


def simulate(config: SimConfig) -> SimResult:
    """Run the generator and score the pipeline on held-out halves.

    Per trial, the first half of the projects is the reference class and
    the second half is scored: budgets are forecasts uplifted at each
    configured risk level (or the raw forecasts when ``debias`` is off),
    and the exceedance rate is the fraction of held-out projects whose
    true cost beat the budget. ``regression_error`` is the mean absolute
    error of held-out forecasts after regression toward the reference
    mean with the reliability fitted on the reference pairs; it needs at
    least three reference projects, else it comes back NaN.
    """
    if config.n_projects < 2:
        raise InvalidValue("need at least 2 projects per trial to split off a reference class")
    bias = config.bias
    n = config.n_projects
    n_ref = n // 2
    shave_factor = 1.0 - bias.strategic_shave * bias.competition_intensity

    overrun_sum = 0.0
    sample: list[float] = []
    exceed_counts = {p: 0 for p in config.percentiles}
    eval_total = 0
    abs_err_sum = 0.0
    abs_err_count = 0

    # the quantile legitimately lands on an underrun in noisy bias-free
    # configs; that is signal here, not a user mistake worth 10,000 warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativeUpliftWarning)
        warnings.simplefilter("ignore", ClampedCorrelationWarning)
        for trial in range(config.trials):
            rng = np.random.default_rng(np.random.SeedSequence((config.seed, trial)))
            costs = rng.lognormal(config.log_mean, config.log_stdev, n)
            noise_anchor = rng.lognormal(0.0, config.noise_stdev, n)
            noise_update = rng.lognormal(0.0, config.noise_stdev, n)

            anchor = bias.optimism_multiplier * costs * noise_anchor
            update = bias.optimism_multiplier * costs * noise_update
            if bias.anchor_passthrough:
                adjusted = update
            else:
                adjusted = anchor + bias.anchor_weight * (update - anchor)
            forecasts = adjusted * shave_factor
            overruns = (costs - forecasts) / forecasts

            overrun_sum += float(overruns.sum())
            if len(sample) < SAMPLE_CAP:
                sample.extend(
                    float(x) for x in overruns[: SAMPLE_CAP - len(sample)]
                )

            ref_overruns = overruns[:n_ref]
            eval_forecasts = forecasts[n_ref:]
            eval_costs = costs[n_ref:]
            eval_total += n - n_ref
            for p in config.percentiles:
                u = empirical_uplift(ref_overruns, p) if config.debias else 0.0
                budgets = eval_forecasts * (1.0 + u)
                exceed_counts[p] += int(np.count_nonzero(eval_costs > budgets))

            err = _regression_abs_error(
                forecasts[:n_ref], costs[:n_ref], eval_forecasts, eval_costs
            )
            if err is not None:
                abs_err_sum += err
                abs_err_count += n - n_ref

    calibration = tuple(
        (p, exceed_counts[p] / eval_total) for p in config.percentiles
    )
    return SimResult(
        config=config,
        mean_overrun=overrun_sum / (config.trials * n),
        uplift_calibration=calibration,
        regression_error=abs_err_sum / abs_err_count if abs_err_count else float("nan"),
        realized_overruns=tuple(sample),
        n_projects_total=config.trials * n,
    )


def _regression_abs_error(
    ref_forecasts: np.ndarray,
    ref_costs: np.ndarray,
    eval_forecasts: np.ndarray,
    eval_costs: np.ndarray,
) -> float | None:
    """Total |regressed - true| on the held-out half; None if unfittable.

    Mirrors the estimate-then-regress path: reliability is the clamped
    correlation between reference forecasts and outcomes, the class mean
    is the reference mean outcome, and rho == 1 keeps forecasts exactly.
    A degenerate reference (constant series) yields rho = 0, i.e. full
    regression to the mean — a constant carries no usable signal.
    """
    if len(ref_forecasts) < 3:
        return None
    if np.ptp(ref_forecasts) == 0.0 or np.ptp(ref_costs) == 0.0:
        rho = 0.0
    else:
        pairs = list(zip(ref_forecasts.tolist(), ref_costs.tolist()))
        rho = estimate_reliability(pairs).rho
    mu = float(ref_costs.mean())
    if rho == 1.0:
        regressed = eval_forecasts
    elif rho == 0.0:
        regressed = np.full_like(eval_forecasts, mu)
    else:
        regressed = mu + rho * (eval_forecasts - mu)
    return float(np.abs(regressed - eval_costs).sum())


def calibration_report(result: SimResult) -> list[CalibrationRow]:
    """Score each risk level against its target exceedance rate.

    The tolerance is three binomial standard errors with the trial count
    as the effective sample size: within one trial the held-out
    exceedances share a single estimated uplift, so trials — not
    individual projects — are the independent unit.
    """
    trials = result.config.trials
    rows = []
    for p, empirical in result.uplift_calibration:
        tolerance = 3.0 * math.sqrt(p * (1.0 - p) / trials)
        rows.append(
            CalibrationRow(
                p=p,
                target=p,
                empirical=empirical,
                tolerance=tolerance,
                within_tolerance=abs(empirical - p) <= tolerance,
            )
        )
    return rows


def calibration_csv(rows: Sequence[CalibrationRow]) -> str:
    lines = ["p,target,empirical,tolerance,within_tolerance"]
    for row in rows:
        lines.append(
            f"{row.p!r},{row.target!r},{row.empirical!r},{row.tolerance!r},"
            f"{str(row.within_tolerance).lower()}"
        )
    return "\n".join(lines) + "\n"


def write_calibration_csv(rows: Sequence[CalibrationRow], path: str | Path) -> None:
    try:
        Path(path).write_text(calibration_csv(rows), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
