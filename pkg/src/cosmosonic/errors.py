"""Exception types raised across the package."""


class CosmosonicError(Exception):
    """Base class for all package errors."""


class ContractError(CosmosonicError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(ContractError):
    """A numeric value lies outside the domain of a transform."""


class CatalogError(CosmosonicError):
    """Problem reading a galaxy catalog."""


class EmptyInputError(CatalogError, ValueError):
    """Input contained no usable data."""


class SchemaError(CatalogError):
    """A required column is missing from the catalog header."""

    def __init__(self, column, logical_name=None):
        self.column = column
        self.logical_name = logical_name
        msg = f"missing required column {column!r}"
        if logical_name and logical_name != column:
            msg += f" (field {logical_name!r})"
        super().__init__(msg)


class RowError(CatalogError):
    """A data row could not be turned into a valid record."""

    def __init__(self, row, column, message, line=None):
        self.row = row
        self.column = column
        self.line = line
        self.message = message
        where = f"row {row}" + (f" (line {line})" if line is not None else "")
        super().__init__(f"{where}, column {column!r}: {message}")


class ConfigError(CosmosonicError, ValueError):
    """Invalid render configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class StageError(CosmosonicError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
