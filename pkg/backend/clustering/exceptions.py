"""
Error hierarchy for the clustering toolkit.

Library code raises these; the management commands translate them into
CommandError exit codes (1 for data errors, 2 for usage errors) and the
benchmark harness records them per result row.
"""


class ClusteringError(Exception):
    """Base class for every error raised by the clustering toolkit."""


class InvalidInputError(ClusteringError, ValueError):
    """Arguments violate a documented precondition (dimensions, sizes, ranges)."""


class UndefinedCriterionError(ClusteringError):
    """The requested criterion has no value for these cluster features."""


class DatasetParseError(InvalidInputError):
    """A CSV input could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class InsufficientDataError(ClusteringError):
    """Not enough measurements to compute a summary (e.g. a scaling slope)."""
