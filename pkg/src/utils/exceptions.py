"""
Custom exceptions and error handling for the provenance anomaly toolkit.

Every error carries a machine-readable ``error_code``, a context dictionary
and the process exit code the command-line interface maps it to.
"""

from typing import Any, Dict, Optional

from .logging import get_logger

logger = get_logger("provad.errors")


class ProvenanceAnalyticsError(Exception):
    """Base exception class for toolkit errors."""

    exit_code = 1

    def __init__(self, message: str, error_code: Optional[str] = None,
                 context: Optional[Dict[str, Any]] = None):
        """Initialize the exception."""
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.context = context or {}

        logger.debug(f"{type(self).__name__}: {message}", error_code=error_code, context=self.context)


class ConfigurationError(ProvenanceAnalyticsError):
    """Invalid configuration, unknown option or infeasible request."""

    exit_code = 4

    def __init__(self, message: str, setting_name: Optional[str] = None,
                 setting_value: Optional[Any] = None):
        """Initialize configuration error."""
        context = {"setting_name": setting_name, "setting_value": setting_value}
        super().__init__(message, "CONFIG_ERROR", context)
        self.setting_name = setting_name
        self.setting_value = setting_value


class DataValidationError(ProvenanceAnalyticsError):
    """Malformed input data; positions are 1-based when known."""

    exit_code = 2

    def __init__(self, message: str, source: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None,
                 field_value: Optional[Any] = None):
        """Initialize data validation error."""
        context = {"source": source, "line": line, "column": column, "field_value": field_value}
        super().__init__(message, "VALIDATION_ERROR", context)
        self.source = source
        self.line = line
        self.column = column
        self.field_value = field_value

    def __str__(self) -> str:
        position = []
        if self.source:
            position.append(str(self.source))
        if self.line is not None:
            position.append(f"line {self.line}")
        if self.column is not None:
            position.append(f"column {self.column}")
        return f"{', '.join(position)}: {self.message}" if position else self.message


class StorageError(ProvenanceAnalyticsError):
    """A file could not be read or written."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None):
        """Initialize storage error."""
        super().__init__(message, "IO_ERROR", {"path": path})
        self.path = path


class ContractViolationError(ProvenanceAnalyticsError):
    """A caller broke an operation precondition."""

    exit_code = 4

    def __init__(self, message: str, operation: Optional[str] = None,
                 parameter: Optional[str] = None, value: Optional[Any] = None):
        """Initialize contract violation."""
        context = {"operation": operation, "parameter": parameter, "value": value}
        super().__init__(message, "CONTRACT_VIOLATION", context)
        self.operation = operation
        self.parameter = parameter
        self.value = value


class UndefinedMetricError(ContractViolationError):
    """A metric is undefined for the given labels (no attacks, no normals)."""

    def __init__(self, message: str, metric: Optional[str] = None):
        """Initialize undefined metric error."""
        super().__init__(message, operation=metric)
        self.error_code = "UNDEFINED_METRIC"
        self.metric = metric


class ResourceLimitError(ProvenanceAnalyticsError):
    """A computation exceeded a configured resource cap."""

    exit_code = 3

    def __init__(self, message: str, limit_name: Optional[str] = None,
                 limit_value: Optional[Any] = None, error_code: str = "RESOURCE_LIMIT"):
        """Initialize resource limit error."""
        context = {"limit_name": limit_name, "limit_value": limit_value}
        super().__init__(message, error_code, context)
        self.limit_name = limit_name
        self.limit_value = limit_value


class ComputationTimeoutError(ResourceLimitError):
    """A computation ran past its deadline."""

    def __init__(self, message: str, timeout_s: Optional[float] = None):
        """Initialize timeout error."""
        super().__init__(message, "timeout_s", timeout_s, error_code="TIMEOUT")
        self.timeout_s = timeout_s


class InternalInvariantError(ProvenanceAnalyticsError):
    """An internal invariant that construction should guarantee was broken."""

    exit_code = 1

    def __init__(self, message: str, invariant: Optional[str] = None):
        """Initialize internal error."""
        super().__init__(message, "INTERNAL_ERROR", {"invariant": invariant})
        self.invariant = invariant


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the command-line exit code."""
    if isinstance(error, ProvenanceAnalyticsError):
        return error.exit_code
    if isinstance(error, OSError):
        return StorageError.exit_code
    return 1


class error_context:
    """Context manager that logs errors raised inside a named operation."""

    def __init__(self, operation_name: str, reraise: bool = True):
        """Initialize error context."""
        self.operation_name = operation_name
        self.reraise = reraise
        self.error: Optional[BaseException] = None

    def __enter__(self) -> "error_context":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        if exc_val is None:
            return False
        self.error = exc_val
        if isinstance(exc_val, ProvenanceAnalyticsError):
            logger.warning(f"{self.operation_name} failed: {exc_val}", error_code=exc_val.error_code)
        else:
            logger.exception(f"Unexpected error in {self.operation_name}: {exc_val}")
        # Returning True suppresses the exception
        return not self.reraise
