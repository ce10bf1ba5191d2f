"""
Exception hierarchy for the HOM interference simulator
"""

from typing import Optional


class HomError(Exception):
    """Base class for every error raised by the simulator"""


class InvalidInputError(HomError, ValueError):
    """A parameter lies outside its physical domain"""


class GridCoverageError(HomError):
    """A frequency grid does not cover the band it is asked to sample"""


class GridMismatchError(HomError):
    """Two states live on different frequency grids"""


class EmptyStateError(HomError):
    """The filtered joint spectral amplitude has zero norm"""


class InsufficientBaselineError(HomError):
    """A scan has no samples far enough from zero delay to set the baseline"""


class DipEdgeError(HomError):
    """The dip is absent, or its half-depth crossing lies outside the scan"""


class CalibrationError(HomError):
    """Trigger and coincidence rates imply an unphysical efficiency"""


class UndefinedCARError(HomError):
    """No accidental coincidences were recorded; only a lower bound is known"""

    def __init__(self, message: str, lower_bound: float):
        super().__init__(message)
        self.lower_bound = lower_bound


class FitError(HomError):
    """The dip fit did not converge within its evaluation budget"""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best  # DipFit at the last evaluated parameters


class ConfigError(HomError):
    """A run configuration failed to load or validate"""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        text = f"{', '.join(location)}: {message}" if location else message
        super().__init__(text)
        self.field = field
        self.line = line


class CsvParseError(HomError):
    """A scan CSV could not be parsed"""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row
