"""Exception hierarchy shared by every pipeline stage.

Each class carries the process exit code the CLI maps it to, and an optional
``stage`` label filled in by the orchestration layer so a failure deep inside
pre-processing still tells the user where it happened.
"""

from __future__ import annotations


class GhicastError(Exception):
    exit_code = 2

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ConfigError(GhicastError, ValueError):
    exit_code = 1


# -- data problems (exit 2) ---------------------------------------------------


class DataError(GhicastError, ValueError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None, **kw):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, **kw)
        self.line = line


class DuplicateTimestampError(DataError):
    pass


class CadenceError(DataError):
    pass


class DataQualityError(DataError):
    pass


class BoundaryError(DataError):
    pass


class RangeError(DataError):
    pass


class AlignmentError(DataError):
    pass


class MaskError(DataError):
    pass


class ShapeError(DataError):
    pass


class LengthError(DataError):
    pass


# -- numerical failures (exit 3) ----------------------------------------------


class NumericalError(GhicastError, ArithmeticError):
    exit_code = 3


class UnderdeterminedError(NumericalError):
    pass


class ConditioningError(NumericalError):
    pass


class ZeroVarianceError(NumericalError):
    pass


class ZeroRangeError(NumericalError):
    pass


class NormalizationError(NumericalError):
    pass


class DegenerateError(NumericalError):
    pass


class TrainingError(NumericalError):
    pass


class SelectionError(NumericalError):
    pass


class NonStationaryError(NumericalError):
    pass
