"""
Empirical exponential mean-square boundedness check.

An error process ζ_k is exponentially bounded in the mean-square sense when
E‖ζ_k‖² ≤ η E‖ζ_0‖² λᵏ + ν for some η > 0, 0 < λ < 1, ν > 0. Given Monte
Carlo squared errors, the envelope is fitted by least squares over a grid,
keeping only envelopes that the data violate at no more than a small
fraction of time steps.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from invfilter.errors import InvalidParameterError
from invfilter.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_MAX_VIOLATION = 0.05
MIN_RUNS = 50


@dataclass(frozen=True)
class BoundednessReport:
    """Best envelope found on the grid."""

    eta: float
    lam: float
    nu: float
    residual: float
    violation_fraction: float
    feasible: bool
    trivially_bounded: bool = False
    runs: int = 0
    steps: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eta": self.eta,
            "lambda": self.lam,
            "nu": self.nu,
            "residual": self.residual,
            "violation_fraction": self.violation_fraction,
            "feasible": self.feasible,
            "trivially_bounded": self.trivially_bounded,
            "runs": self.runs,
            "steps": self.steps,
        }


def default_grids(mean_square: np.ndarray) -> Dict[str, np.ndarray]:
    return {
        "eta": np.linspace(0.05, 5.0, 100),
        "lambda": np.linspace(0.01, 0.99, 99),
        "nu": np.linspace(0.0, float(np.max(mean_square)), 101),
    }


def _violations(values: np.ndarray, envelope: np.ndarray) -> np.ndarray:
    return values > envelope * (1.0 + 1e-9) + 1e-12


def fit_exponential_envelope(
    mean_square,
    eta_grid: Optional[np.ndarray] = None,
    lambda_grid: Optional[np.ndarray] = None,
    nu_grid: Optional[np.ndarray] = None,
    max_violation: float = DEFAULT_MAX_VIOLATION,
) -> BoundednessReport:
    """
    Fit η m_0 λᵏ + ν to a mean-square error sequence m_0..m_K.

    Args:
        mean_square: E‖ζ_k‖² for k = 0..K
        eta_grid, lambda_grid, nu_grid: Search grids (defaults from ``default_grids``)
        max_violation: Largest admissible fraction of steps above the envelope

    Returns:
        BoundednessReport for the least-squares envelope among admissible ones
    """
    values = np.asarray(mean_square, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InvalidParameterError("mean-square sequence must be a non-empty vector")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise InvalidParameterError("mean-square sequence must be finite and nonnegative")

    if not np.any(values):
        return BoundednessReport(
            eta=0.0,
            lam=0.0,
            nu=0.0,
            residual=0.0,
            violation_fraction=0.0,
            feasible=True,
            trivially_bounded=True,
            steps=values.size,
        )

    grids = default_grids(values)
    eta_grid = grids["eta"] if eta_grid is None else np.asarray(eta_grid, dtype=float)
    lambda_grid = grids["lambda"] if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    nu_grid = grids["nu"] if nu_grid is None else np.asarray(nu_grid, dtype=float)

    steps = np.arange(values.size)
    best = None
    for lam in lambda_grid:
        decay = values[0] * lam**steps
        for eta in eta_grid:
            # rows: ν candidates, columns: time steps
            envelopes = eta * decay[None, :] + nu_grid[:, None]
            violation = _violations(values[None, :], envelopes).mean(axis=1)
            residual = np.sum((envelopes - values[None, :]) ** 2, axis=1)
            residual = np.where(violation <= max_violation, residual, np.inf)
            idx = int(np.argmin(residual))
            if np.isfinite(residual[idx]) and (best is None or residual[idx] < best[0]):
                best = (float(residual[idx]), float(eta), float(lam), float(nu_grid[idx]), float(violation[idx]))

    if best is None:
        logger.warning("No admissible envelope on the grid", steps=values.size)
        return BoundednessReport(
            eta=float("nan"),
            lam=float("nan"),
            nu=float("nan"),
            residual=float("inf"),
            violation_fraction=1.0,
            feasible=False,
            steps=values.size,
        )

    residual, eta, lam, nu, violation = best
    return BoundednessReport(
        eta=eta,
        lam=lam,
        nu=nu,
        residual=residual,
        violation_fraction=violation,
        feasible=lam < 1.0 and violation <= max_violation,
        steps=values.size,
    )


def boundedness_diagnostic(
    records,
    eta_grid: Optional[np.ndarray] = None,
    lambda_grid: Optional[np.ndarray] = None,
    nu_grid: Optional[np.ndarray] = None,
    max_violation: float = DEFAULT_MAX_VIOLATION,
    min_runs: int = MIN_RUNS,
) -> BoundednessReport:
    """
    Boundedness fit of an ensemble of squared-error sequences.

    Args:
        records: runs × (K + 1) matrix of ‖ζ_k‖²
        min_runs: Fewest runs accepted for the expectation to be meaningful

    Raises:
        InvalidParameterError: fewer than ``min_runs`` runs
    """
    matrix = np.atleast_2d(np.asarray(records, dtype=float))
    runs = matrix.shape[0]
    if runs < min_runs:
        raise InvalidParameterError(f"boundedness diagnostic needs at least {min_runs} runs, got {runs}")
    report = fit_exponential_envelope(matrix.mean(axis=0), eta_grid, lambda_grid, nu_grid, max_violation)
    logger.info(
        "Boundedness fit",
        runs=runs,
        eta=report.eta,
        lam=report.lam,
        nu=report.nu,
        violation_fraction=report.violation_fraction,
    )
    return BoundednessReport(**{**report.__dict__, "runs": runs})
