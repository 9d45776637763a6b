"""
Logging system for the provenance anomaly toolkit.

Diagnostics go to stderr through loguru so that stdout stays free for
machine-parseable output (scores, metrics, reports). Components obtain a
named logger through ``get_logger`` and may time operations with
``performance_timer``.
"""

import os
import sys
import time
from pathlib import Path
from typing import Any, Dict, Optional, Union

from loguru import logger as _loguru_logger

_CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{extra[component]}</cyan>:{function}:{line} | "
    "{message}"
)
_FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {extra[component]}:{function}:{line} | {message}"

_configured = False


def configure_logging(log_level: str = "INFO", log_file: Optional[Union[str, Path]] = None,
                      max_log_size_mb: int = 10, retention_days: int = 30) -> None:
    """Route log output to stderr (and optionally a rotating file)."""
    global _configured
    _loguru_logger.remove()
    _loguru_logger.configure(extra={"component": "provad"})
    _loguru_logger.add(sys.stderr, level=log_level.upper(), format=_CONSOLE_FORMAT,
                       colorize=None, backtrace=False, diagnose=False)
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        _loguru_logger.add(str(log_file), level="DEBUG", format=_FILE_FORMAT,
                           rotation=f"{max_log_size_mb} MB",
                           retention=f"{retention_days} days", encoding="utf-8")
    _configured = True


def _ensure_configured() -> None:
    if not _configured:
        configure_logging(os.getenv("PROVAD_LOG_LEVEL", "INFO"), os.getenv("PROVAD_LOG_FILE") or None)


class AnalyticsLogger:
    """Named logger; keyword arguments are appended to the message as context."""

    def __init__(self, name: str = "provad") -> None:
        """Initialize the logger for a component."""
        _ensure_configured()
        self.name = name
        self._logger = _loguru_logger.bind(component=name)

    def _log(self, level: str, message: str, context: Dict[str, Any]) -> None:
        extra_info = f" | {context}" if context else ""
        # depth=2 attributes the record to the caller of debug()/info()/...
        self._logger.opt(depth=2).log(level, f"{message}{extra_info}")

    def debug(self, message: str, **kwargs: Any) -> None:
        """Log a debug message."""
        self._log("DEBUG", message, kwargs)

    def info(self, message: str, **kwargs: Any) -> None:
        """Log an info message."""
        self._log("INFO", message, kwargs)

    def warning(self, message: str, **kwargs: Any) -> None:
        """Log a warning message."""
        self._log("WARNING", message, kwargs)

    def error(self, message: str, **kwargs: Any) -> None:
        """Log an error message."""
        self._log("ERROR", message, kwargs)

    def exception(self, message: str, **kwargs: Any) -> None:
        """Log an error together with the active traceback."""
        extra_info = f" | {kwargs}" if kwargs else ""
        self._logger.opt(depth=1, exception=True).error(f"{message}{extra_info}")


_loggers: Dict[str, AnalyticsLogger] = {}


def get_logger(component: str = "provad") -> AnalyticsLogger:
    """Get the logger for a component (cached per name)."""
    if component not in _loggers:
        _loggers[component] = AnalyticsLogger(component)
    return _loggers[component]


class performance_timer:
    """Context manager timing an operation; ``elapsed_ms`` is set on exit."""

    def __init__(self, operation_name: str, logger_instance: Optional[AnalyticsLogger] = None,
                 warn_after_s: float = 5.0):
        """Initialize the timer."""
        self.operation_name = operation_name
        self.logger = logger_instance or get_logger("provad.performance")
        self.warn_after_s = warn_after_s
        self.start_time: Optional[float] = None
        self.elapsed_ms: float = 0.0

    def __enter__(self) -> "performance_timer":
        self.start_time = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        if self.start_time is not None:
            duration = time.perf_counter() - self.start_time
            self.elapsed_ms = duration * 1000.0
            log = self.logger.warning if duration > self.warn_after_s else self.logger.debug
            log(f"Operation '{self.operation_name}' took {duration:.3f}s")
