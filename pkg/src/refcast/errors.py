"""Exception hierarchy with stable machine-readable codes.

Every error carries a ``code`` (printed by the CLI as
``refcast: error[CODE]: message``) and an ``exit_code`` in the CLI's
contract: 1 validation/domain error, 2 insufficient data, 3 I/O error,
4 usage error.
"""

from __future__ import annotations


class RefcastError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "ERROR"
    exit_code = 1


class InvalidValue(RefcastError):
    """A value violates a type invariant (negative amount, bad enum, ...)."""

    code = "INVALID_VALUE"


class MoneyMismatch(RefcastError):
    """Arithmetic or comparison between incompatible currencies/price bases."""

    code = "MONEY_MISMATCH"


class MissingField(RefcastError):
    """A required forecast/actual value is absent from the record."""

    code = "MISSING_FIELD"


class ZeroForecast(RefcastError):
    """Deviation is undefined because the forecast value is zero."""

    code = "ZERO_FORECAST"


class ParseError(RefcastError):
    """Input file is not valid CSV/JSON of the declared schema."""

    code = "PARSE_ERROR"


class DatasetInvalid(RefcastError):
    """A dataset was rejected wholesale; carries the validation report."""

    code = "VALIDATION"

    def __init__(self, report, message: str = "dataset failed validation"):
        super().__init__(message)
        self.report = report


class ClassTooSmall(RefcastError):
    """Reference class has fewer than the minimum number of members."""

    code = "CLASS_TOO_SMALL"
    exit_code = 2


class NoMatch(RefcastError):
    """No record in the dataset matches the class filter."""

    code = "NO_MATCH"
    exit_code = 2


class MetricMismatch(RefcastError):
    """Two reference classes were built over different deviation metrics."""

    code = "METRIC_MISMATCH"


class InsufficientPairs(RefcastError):
    """Fewer than three (prediction, outcome) pairs for a historical rho."""

    code = "INSUFFICIENT_PAIRS"
    exit_code = 2


class DegenerateVariance(RefcastError):
    """Correlation undefined: one of the series is constant."""

    code = "DEGENERATE_VARIANCE"


class VariableMismatch(RefcastError):
    """Class mean and intuitive estimate are in different variables."""

    code = "VARIABLE_MISMATCH"


class NoSignChange(RefcastError):
    """IRR undefined: all cashflows have the same sign."""

    code = "NO_SIGN_CHANGE"


class NoRootInBracket(RefcastError):
    """IRR root search found no zero of NPV inside the rate bracket."""

    code = "NO_ROOT_IN_BRACKET"


class IoError(RefcastError):
    """Filesystem failure reading or writing an artifact."""

    code = "IO"
    exit_code = 3


class RefcastWarning(UserWarning):
    """Base class for advisory warnings emitted by this package."""


class SmallClassWarning(RefcastWarning):
    """Reference class is statistically thin (fewer than 20 members)."""


class NegativeUpliftWarning(RefcastWarning):
    """Requested quantile of the deviation sample is negative."""


class ClampedCorrelationWarning(RefcastWarning):
    """Raw Pearson correlation was negative and was clamped to zero."""


class MultipleRootsWarning(RefcastWarning):
    """NPV has several zeros in the bracket; nearest-to-zero returned."""
