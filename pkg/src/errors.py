"""
Error types for the forecasting engine.
Every error carries a machine-parsable code that the CLI prints first on stderr.
"""

from typing import Any, Dict, List, Optional


class ForecastError(Exception):
    """Base class for all engine errors"""

    code = "E_FORECAST"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def one_line(self) -> str:
        """Single-line `CODE: message` form used on stderr"""
        text = " ".join(self.message.split())
        return f"{self.code}: {text}"


class InsufficientDataError(ForecastError):
    code = "E_INSUFFICIENT_DATA"


class ArgumentError(ForecastError, ValueError):
    code = "E_ARGUMENT"


class DegenerateSeriesError(ForecastError):
    code = "E_DEGENERATE"


class NoOverlapError(ForecastError):
    code = "E_NO_OVERLAP"


class ConstraintViolationError(ForecastError):
    code = "E_CONSTRAINT"


class ConvergenceError(ForecastError):
    """Raised when no optimizer restart produced a usable objective"""

    code = "E_CONVERGENCE"

    def __init__(self, message: str, best: Optional[Dict[str, Any]] = None):
        super().__init__(message, best=best)
        self.best = best or {}


class CollinearityError(ForecastError):
    code = "E_COLLINEAR"


class ScenarioIncompleteError(ForecastError):
    code = "E_SCENARIO_INCOMPLETE"


class EmptyGridError(ForecastError):
    code = "E_EMPTY_GRID"


class SelectionError(ForecastError):
    """Raised when every backtest combination failed"""

    code = "E_SELECTION"

    def __init__(self, message: str, reasons: Optional[Dict[str, str]] = None):
        super().__init__(message, reasons=reasons)
        self.reasons = reasons or {}


class FormatError(ForecastError):
    code = "E_FORMAT"

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}", line=line)
        self.line = line


class GapError(ForecastError):
    code = "E_GAP"

    def __init__(self, msn: str, year: int):
        super().__init__(f"internal missing value in {msn} at {year}", msn=msn, year=year)
        self.msn = msn
        self.year = year


class ParseError(ForecastError):
    code = "E_PARSE"


class UnknownMsnError(ForecastError):
    code = "E_UNKNOWN_MSN"

    def __init__(self, code: str, nearest: List[str]):
        hint = f" (nearest: {', '.join(nearest)})" if nearest else ""
        super().__init__(f"unknown MSN code {code!r}{hint}", msn=code, nearest=nearest)
        self.nearest = nearest


class MissingSeriesError(ForecastError):
    code = "E_MISSING_SERIES"


class CoverageError(ForecastError):
    code = "E_COVERAGE"


class ConfigError(ForecastError):
    code = "E_CONFIG"


class InputOutputError(ForecastError):
    code = "E_IO"
