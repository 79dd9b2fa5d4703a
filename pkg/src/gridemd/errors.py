"""Exception hierarchy.

Two branches matter for the CLI exit-code contract: ``ConfigError`` (bad
input files, out-of-range parameters, exit code 2) and ``ModelViolation``
(streams that break the problem model, exit code 3).
"""


class GridEmdError(Exception):
    """Base class for all package errors."""


class ConfigError(GridEmdError):
    """Invalid configuration or unparseable input."""


class ParseError(ConfigError):
    """Malformed stream file line."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class RangeError(ConfigError):
    """Coordinate outside the configured grid."""


class TooLarge(ConfigError):
    """Instance exceeds the scale an exhaustive routine can handle."""


class ModelViolation(GridEmdError):
    """Stream or input violates the problem model."""


class WeightMismatch(ModelViolation):
    """Total weights of the two sets differ."""


class SizeMismatch(ModelViolation):
    """Stream left the two multisets with different sizes."""


class EmptyInput(ModelViolation):
    """An operation requiring a nonempty point set got an empty one."""


class EmptyStream(ModelViolation):
    """Estimate requested before any point arrived."""


class DeletionUnsupported(ModelViolation):
    """Deletion fed to an insertion-only algorithm."""


class DistinctBoundExceeded(ModelViolation):
    """More distinct points on the bounded side than the configured k."""


class NegativeMultiplicity(ModelViolation):
    """A deletion drove some point's multiplicity below zero."""


class Infeasible(ModelViolation):
    """Capacity constraints cannot cover all points."""


class AllLevelsOverflowed(GridEmdError):
    """Every sampling level of a distinct-count sketch is over capacity."""


class CycleEncountered(GridEmdError):
    """Path decomposition hit a cycle; the input matching is not optimal."""
