"""Exception types shared across the package."""


class DriftBenchError(Exception):
    """Base class for all driftbench errors."""


class DataFormatError(DriftBenchError):
    """Malformed input data: ragged CSV rows, non-numeric cells, missing values."""


class EmptyInputError(DataFormatError):
    """An input that must be non-empty was empty."""


class ShapeError(DriftBenchError):
    """Dimensionality mismatch between a model/params and the data."""


class ParameterError(DriftBenchError):
    """An argument is outside its valid range."""


class DegenerateDataError(DriftBenchError):
    """Data cannot support the requested operation (single class, constant features, ...)."""


class StateError(DriftBenchError):
    """A detector state machine was driven out of order."""
