"""Exception hierarchy shared by all eda-personalize modules."""


class EdaError(Exception):
    """Base class for every error raised by this package."""


class FormatError(EdaError):
    """A file does not conform to its declared on-disk format."""


class DataError(EdaError):
    """Payload values are invalid (non-finite samples, bad label values)."""


class SpanError(EdaError):
    """Condition spans overlap, are out of range, or are inverted."""


class DegenerateSignalError(EdaError):
    """A signal has no variation where the requested operation needs some."""


class EmptyDatasetError(EdaError):
    """Windowing produced no examples (signal or span too short)."""


class InsufficientDataError(EdaError):
    """A sampling budget exceeds the number of available examples."""


class ShapeError(EdaError):
    """Array shapes are incompatible with the model or operation."""


class DivergenceError(EdaError):
    """Training loss became non-finite."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


class ConsistencyError(EdaError):
    """Experiment rows violate the paired ssl/scratch bookkeeping contract."""


class ConfigError(EdaError):
    """An experiment or CLI configuration value is invalid."""
