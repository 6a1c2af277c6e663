"""Exception types shared across the package."""

from __future__ import annotations


class MsefError(Exception):
    """Base class for every error raised by msef."""


class DimensionError(MsefError, ValueError):
    """Tensor or array extents do not agree."""


class NumericError(MsefError, ArithmeticError):
    """A NaN or infinite value appeared where finite values are required."""


class ContractError(MsefError, RuntimeError):
    """A caller violated an operation's precondition."""


class VocabularyError(MsefError, KeyError):
    """A token id is outside the model vocabulary."""


class ValidationError(MsefError, ValueError):
    """A record failed schema validation.

    Attributes:
        field: name of the offending field, when one can be named.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class RangeError(ValidationError):
    """A score lies outside its dimension's permitted range."""


class InputError(MsefError, ValueError):
    """Input data is unusable for the requested operation."""


class DegenerateError(InputError):
    """Input has zero spread where a nonzero one is required."""


class SingularityError(MsefError, ArithmeticError):
    """Design matrix is rank deficient.

    Attributes:
        column: index or name of the first dependent column.
    """

    def __init__(self, message: str, column: int | str | None = None):
        super().__init__(message)
        self.column = column


class UndefinedCorrelationError(DegenerateError):
    """Correlation with a zero-variance column."""

    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


class ConfigError(InputError):
    """A run configuration is malformed or references missing inputs."""
