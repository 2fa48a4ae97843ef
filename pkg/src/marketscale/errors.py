"""Exception hierarchy shared by every analysis module."""


class AnalysisError(ValueError):
    """Base class for all errors raised by marketscale."""

    code = "AnalysisError"


class ZeroVariance(AnalysisError):
    code = "ZeroVariance"


class NonPositiveValue(AnalysisError):
    code = "NonPositiveValue"


class InsufficientData(AnalysisError):
    code = "InsufficientData"


class LengthMismatch(AnalysisError):
    code = "LengthMismatch"


class OutOfRange(AnalysisError):
    code = "OutOfRange"


class GridTooFine(AnalysisError):
    code = "GridTooFine"


class EmptyScale(AnalysisError):
    code = "EmptyScale"


class OutOfGrid(AnalysisError):
    code = "OutOfGrid"


class GridMismatch(AnalysisError):
    code = "GridMismatch"


class NonStationaryFit(AnalysisError):
    code = "NonStationaryFit"


class SingularRegression(AnalysisError):
    code = "SingularRegression"


class OrderNotFound(AnalysisError):
    code = "OrderNotFound"


class InvalidHorizon(AnalysisError):
    code = "InvalidHorizon"


class DiagnosticsFailed(AnalysisError):
    """VAR(P) residuals are serially correlated or the VAR is unstable.

    ``report`` carries the partially filled
    :class:`~marketscale.causality.CausalityReport` (Wald fields withheld).
    """

    code = "DiagnosticsFailed"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ParseError(AnalysisError):
    code = "ParseError"

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NonPositiveClose(ParseError):
    code = "NonPositiveClose"


class NonMonotoneDates(ParseError):
    code = "NonMonotoneDates"


class MissingMonth(AnalysisError):
    code = "MissingMonth"


class ConfigError(AnalysisError):
    code = "ConfigError"
