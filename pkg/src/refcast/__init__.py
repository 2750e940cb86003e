"""Outside-view forecasting for projects with a history of going wrong.

The package turns records of completed projects into reference classes,
reads off optimism-bias uplifts at chosen risk levels, regresses
inside-view estimates toward class means, checks funding structures and
risk registers against accountability rules, diagnoses whether forecast
errors look like self-delusion or strategic deception, and validates the
whole pipeline against a seeded bias simulator.
"""

__version__ = "0.1.0"

from . import errors
from .biassim import (
    BiasParams,
    CalibrationRow,
    SimConfig,
    SimResult,
    calibration_report,
    simulate,
)
from .core import (
    STAGES,
    DeviationMetric,
    Money,
    PriceBasis,
    ProjectRecord,
    deviation,
)
from .engine import (
    EstimateVariable,
    IntuitiveEstimate,
    RegressedForecast,
    ReliabilityEstimate,
    RiskAllowance,
    UpliftedForecast,
    estimate_reliability,
    forecast_with_uplift,
    regress,
)
from .fixtures import fixture_path
from .governance import (
    CostIncreaseEvent,
    DiagnosticProfile,
    Finding,
    FundingStructure,
    Quadrant,
    RiskRegisterEntry,
    apportion_cost_increase,
    check_funding,
    classify,
    irr,
    npv,
    validate_risk_register,
)
from .ingest import (
    Dataset,
    ValidationReport,
    dataset_from_records,
    load_dataset,
    save_dataset,
)
from .refclass import (
    ClassFilter,
    ComparabilityResult,
    DistributionSummary,
    ReferenceClass,
    UpliftQuery,
    build_class,
    comparability_test,
    empirical_uplift,
    load_class,
    save_class,
    summarize,
    uplift,
)
from .report import FiveStepReport, five_step_report

__all__ = [
    "__version__",
    "errors",
    # money and records
    "Money",
    "PriceBasis",
    "ProjectRecord",
    "DeviationMetric",
    "deviation",
    "STAGES",
    # datasets
    "Dataset",
    "ValidationReport",
    "load_dataset",
    "save_dataset",
    "dataset_from_records",
    # reference classes
    "ClassFilter",
    "ReferenceClass",
    "DistributionSummary",
    "UpliftQuery",
    "ComparabilityResult",
    "build_class",
    "summarize",
    "uplift",
    "empirical_uplift",
    "comparability_test",
    "save_class",
    "load_class",
    # estimate correction
    "EstimateVariable",
    "IntuitiveEstimate",
    "ReliabilityEstimate",
    "RegressedForecast",
    "RiskAllowance",
    "UpliftedForecast",
    "estimate_reliability",
    "regress",
    "forecast_with_uplift",
    # governance
    "FundingStructure",
    "RiskRegisterEntry",
    "DiagnosticProfile",
    "Quadrant",
    "CostIncreaseEvent",
    "Finding",
    "check_funding",
    "apportion_cost_increase",
    "classify",
    "validate_risk_register",
    "npv",
    "irr",
    # simulator
    "BiasParams",
    "SimConfig",
    "SimResult",
    "CalibrationRow",
    "simulate",
    "calibration_report",
    # reports and fixtures
    "FiveStepReport",
    "five_step_report",
    "fixture_path",
]
