"""
Exception hierarchy shared by the filters, bounds, scenarios and harness.
"""

from typing import Any, Dict, Optional

import numpy as np


class InvFilterError(Exception):
    """Base class for every failure raised by the package."""


class DimensionMismatchError(InvFilterError, ValueError):
    """An input vector or matrix does not have the shape the model requires."""


class InvalidParameterError(InvFilterError, ValueError):
    """A scalar parameter is outside its admissible range (e.g. n + kappa <= 0)."""


class FactorizationError(InvFilterError):
    """Cholesky factorisation failed at every jitter level."""

    def __init__(self, message: str, matrix: Optional[np.ndarray] = None):
        super().__init__(message)
        self.matrix = matrix


class SingularInnovationError(InvFilterError):
    """An innovation covariance is not positive definite, so no gain exists."""

    def __init__(self, message: str, matrix: Optional[np.ndarray] = None):
        super().__init__(message)
        self.matrix = matrix


class NumericalFailure(InvFilterError):
    """An information matrix recursion hit a singular system."""

    def __init__(self, message: str, condition: float = float("inf")):
        super().__init__(message)
        self.condition = condition


class SimulationAbort(InvFilterError):
    """Scenario dynamics left their domain of validity."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StepFailure(InvFilterError):
    """A filter fold failed at a given time index."""

    def __init__(self, step: int, cause: InvFilterError, filter_name: str = ""):
        label = f"{filter_name} " if filter_name else ""
        super().__init__(f"{label}failed at step {step}: {cause}")
        self.step = step
        self.cause = cause
        self.filter_name = filter_name


class ConfigError(InvFilterError, ValueError):
    """Experiment configuration is invalid or contains unknown keys."""
