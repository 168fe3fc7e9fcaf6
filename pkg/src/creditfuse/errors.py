"""Exception types shared across the package."""


class CreditFuseError(Exception):
    """Base class for all creditfuse errors."""


class SchemaError(CreditFuseError):
    """Schema mismatch: unknown, missing, or incompatible columns."""


class ParseError(CreditFuseError):
    """A cell could not be parsed; message names the row and column."""


class ImputationError(CreditFuseError):
    """A column has no observed values to impute from."""


class ModelFormatError(CreditFuseError):
    """A serialized model file is malformed or has the wrong version."""


class ConfigError(CreditFuseError):
    """An experiment or fusion configuration is invalid."""
