"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ContractError(RuntimeError):
    """A call violated an operation's preconditions (e.g. non-scalar backward root)."""


class ConfigError(ValueError):
    """A configuration value is invalid or inconsistent."""


class ValidationError(ValueError):
    """User-supplied data (ratings, durations, config files) failed validation.

    ``errors`` optionally carries per-field diagnostics as (field, message) pairs.
    """

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = list(errors or [])


class DataFormatError(Exception):
    """Base class for binary file-format parse failures."""


class BadMagicError(DataFormatError):
    """File does not start with the expected magic bytes."""


class TruncatedPayloadError(DataFormatError):
    """File ends before the payload promised by its header."""


class HeaderSizeMismatchError(DataFormatError):
    """Header-declared sizes disagree with the actual payload size."""


class EdfHeaderError(DataFormatError):
    """EDF header field is not ASCII or cannot be parsed."""


class EdfRecordError(DataFormatError):
    """EDF data records are inconsistent with the header (count or truncation)."""


class EdfScalingError(DataFormatError):
    """EDF signal declares a zero digital range, so no physical scaling exists."""
