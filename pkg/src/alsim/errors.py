"""Exception types shared across the package.

Every failure mode raised by the library derives from :class:`AlsimError`,
so callers can catch one base class at the harness boundary.
"""


class AlsimError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(AlsimError):
    """A text input could not be parsed (carries a line number when known)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(AlsimError):
    """An input value violates a documented contract."""


class FormatError(AlsimError):
    """A binary file does not follow the expected layout."""


class StratificationError(AlsimError):
    """Stratified sampling cannot satisfy the per-class quotas."""


class SizingError(AlsimError):
    """A requested size is incompatible with the available data."""


class StateError(AlsimError):
    """An operation was applied to data in the wrong split or lifecycle state."""


class ConfigError(AlsimError):
    """A configuration value or selector cannot be resolved."""


class ShapeError(AlsimError):
    """Array dimensions do not line up."""


class NumericalError(AlsimError):
    """A computation produced non-finite values."""


class UndefinedMetricError(AlsimError):
    """A metric is undefined for the given inputs (e.g. empty vocabularies)."""
