"""
Structured JSON logging with optional Cloud Logging shipping.
"""

import json
import logging
import traceback
from typing import Any, Dict, Optional

# Cloud Logging is only attached when explicitly enabled
try:
    from google.cloud import logging as cloud_logging
    from google.cloud.logging.handlers import CloudLoggingHandler

    CLOUD_LOGGING_AVAILABLE = True
except ImportError:
    cloud_logging = None
    CloudLoggingHandler = None
    CLOUD_LOGGING_AVAILABLE = False


_LOGGERS: Dict[str, "StructuredLogger"] = {}


def _json_default(value: Any) -> Any:
    # numpy scalars and arrays
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


class StructuredLogger:
    """Structured logger writing one JSON object per record."""

    def __init__(self, name: str, level: str = "INFO", project_id: Optional[str] = None, cloud: bool = False):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)
        self.logger.propagate = False

        # Remove existing handlers
        self.logger.handlers.clear()

        console_handler = logging.StreamHandler()
        console_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
        self.logger.addHandler(console_handler)

        if cloud and project_id:
            if not CLOUD_LOGGING_AVAILABLE:
                self.logger.warning("Cloud Logging requested but google-cloud-logging is not installed")
                return
            try:
                client = cloud_logging.Client(project=project_id)
                self.logger.addHandler(CloudLoggingHandler(client, name=name))
            except Exception as e:
                self.logger.warning(f"Cloud Logging not available: {e}")

    def _structured_log(self, level: int, severity: str, message: str, **kwargs):
        """Create structured log entry."""
        if not self.logger.isEnabledFor(level):
            return
        log_entry = {"message": message, "severity": severity, **kwargs}
        self.logger.log(level, json.dumps(log_entry, default=_json_default))

    def info(self, message: str, **kwargs):
        """Log info message."""
        self._structured_log(logging.INFO, "INFO", message, **kwargs)

    def warning(self, message: str, **kwargs):
        """Log warning message."""
        self._structured_log(logging.WARNING, "WARNING", message, **kwargs)

    def error(self, message: str, error: Optional[BaseException] = None, **kwargs):
        """Log error message with traceback."""
        if error is not None:
            kwargs["error_type"] = type(error).__name__
            kwargs["error_message"] = str(error)
            kwargs["traceback"] = "".join(traceback.format_exception(type(error), error, error.__traceback__))

        self._structured_log(logging.ERROR, "ERROR", message, **kwargs)

    def critical(self, message: str, **kwargs):
        """Log critical message."""
        self._structured_log(logging.CRITICAL, "CRITICAL", message, **kwargs)

    def debug(self, message: str, **kwargs):
        """Log debug message."""
        self._structured_log(logging.DEBUG, "DEBUG", message, **kwargs)

    def set_level(self, level: str):
        self.logger.setLevel(level)


def get_logger(name: str) -> StructuredLogger:
    """Get or create a structured logger."""
    if name not in _LOGGERS:
        from invfilter.config import config

        _LOGGERS[name] = StructuredLogger(
            name, level=config.LOG_LEVEL, project_id=config.PROJECT_ID, cloud=config.CLOUD_LOGGING
        )
    return _LOGGERS[name]


def set_global_level(level: str):
    """Apply a log level to existing loggers and to those created later (CLI --log-level)."""
    from invfilter.config import config

    config.LOG_LEVEL = level.upper()
    for structured in _LOGGERS.values():
        structured.set_level(level.upper())
