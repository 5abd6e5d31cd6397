"""
Process-level configuration for the inverse filtering toolkit.

Experiment parameters live in YAML files (see ``invfilter.harness.schemas``);
this module only covers settings that belong to the running process:
logging, worker count, telemetry and default output location.
"""

import os
from typing import Any, Dict, Optional

from dotenv import load_dotenv

# Pick up a local .env before reading the environment
load_dotenv()


def _env_flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Config:
    """Environment-driven runtime configuration."""

    def __init__(self):
        # Logging Configuration
        self.LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
        self.CLOUD_LOGGING = _env_flag("CLOUD_LOGGING")
        self.PROJECT_ID: Optional[str] = os.getenv("PROJECT_ID") or None
        self.ENVIRONMENT = os.getenv("ENVIRONMENT", "local")

        # Monte Carlo Configuration
        workers = os.getenv("INVFILTER_WORKERS")
        self.WORKERS = int(workers) if workers else (os.cpu_count() or 1)

        # Telemetry Configuration
        self.OTEL_ENABLED = _env_flag("OTEL_ENABLED")
        self.OTEL_CONSOLE_EXPORT = _env_flag("OTEL_CONSOLE_EXPORT")

        # Output Configuration
        self.OUTPUT_DIR = os.getenv("OUTPUT_DIR", "results")

    def validate(self) -> Dict[str, Any]:
        """
        Validate configuration and return status.

        Returns:
            Dict with validation results
        """
        issues = []

        if self.WORKERS < 1:
            issues.append("INVFILTER_WORKERS must be at least 1")

        if self.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            issues.append(f"LOG_LEVEL {self.LOG_LEVEL!r} is not a logging level")

        if self.CLOUD_LOGGING and not self.PROJECT_ID:
            issues.append("CLOUD_LOGGING requires PROJECT_ID")

        return {
            "valid": len(issues) == 0,
            "issues": issues,
            "config": self.to_dict(),
        }

    def to_dict(self) -> Dict[str, Any]:
        """Export configuration as dictionary."""
        return {
            "log_level": self.LOG_LEVEL,
            "cloud_logging": self.CLOUD_LOGGING,
            "project_id": self.PROJECT_ID,
            "environment": self.ENVIRONMENT,
            "workers": self.WORKERS,
            "otel_enabled": self.OTEL_ENABLED,
            "otel_console_export": self.OTEL_CONSOLE_EXPORT,
            "output_dir": self.OUTPUT_DIR,
        }


# Global configuration instance
config = Config()
