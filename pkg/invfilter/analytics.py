"""
Aggregation of Monte Carlo records: time-averaged RMSE and bound curves,
standard errors and paired bootstrap comparisons between filters.

Time averages run over k = 1..K; k = 0 only carries the initial error.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

import numpy as np

from invfilter.errors import InvalidParameterError
from invfilter.harness.schemas import CurveSummary, ExperimentSummary, MonteCarloRecord, RunFailure
from invfilter.logging_config import get_logger

logger = get_logger(__name__)


def run_time_averages(matrix: np.ndarray) -> np.ndarray:
    """Per-run mean over k = 1..K of a runs × (K + 1) matrix."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] < 2:
        raise InvalidParameterError("curves need at least one step after k = 0")
    return matrix[:, 1:].mean(axis=1)


def cumulative_rmse(per_step: np.ndarray) -> np.ndarray:
    """√(mean_{j=1..k} m_j) for k >= 1; entry 0 is √m_0."""
    per_step = np.asarray(per_step, dtype=float)
    curve = np.empty_like(per_step)
    curve[0] = np.sqrt(per_step[0])
    if per_step.shape[0] > 1:
        steps = np.arange(1, per_step.shape[0])
        curve[1:] = np.sqrt(np.cumsum(per_step[1:]) / steps)
    return curve


def summarize_curve(curve: str, matrix: np.ndarray) -> CurveSummary:
    """
    Summarise one curve given its runs × (K + 1) matrix.

    Returns:
        CurveSummary with rmse = √(mean over runs and k >= 1), the standard
        error of the per-run time-averaged value and the cumulative curve
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    per_run = run_time_averages(matrix)
    runs = per_run.shape[0]
    mean_square = float(per_run.mean())
    stderr = float(per_run.std(ddof=1) / np.sqrt(runs)) if runs > 1 else 0.0
    per_step = matrix.mean(axis=0)
    return CurveSummary(
        curve=curve,
        rmse=float(np.sqrt(mean_square)),
        mean_square=mean_square,
        stderr=stderr,
        runs_used=runs,
        cumulative=cumulative_rmse(per_step),
        per_step=per_step,
    )


def summarize_records(records: Iterable[MonteCarloRecord]) -> ExperimentSummary:
    """Ordered reduction of run records; failed runs are excluded and listed."""
    records = sorted(records, key=lambda record: record.run_id)
    completed = [record for record in records if not record.failed]
    failures: List[RunFailure] = [record.failure for record in records if record.failure is not None]

    curves: Dict[str, CurveSummary] = {}
    names = sorted({name for record in completed for name in record.curves})
    for name in names:
        matrix = np.array([record.curves[name] for record in completed if name in record.curves])
        curves[name] = summarize_curve(name, matrix)

    deltas: Dict[str, float] = {}
    for record in completed:
        for key, value in record.deltas.items():
            deltas[key] = max(deltas.get(key, 0.0), value)

    if failures:
        logger.warning("Runs excluded from aggregates", excluded=len(failures), total=len(records))
    return ExperimentSummary(curves=curves, runs_total=len(records), failures=failures, deltas=deltas)


@dataclass(frozen=True)
class BootstrapComparison:
    """Confidence that curve ``better``'s time-averaged MSE is below ``worse``'s."""

    better: str
    worse: str
    rmse_better: float
    rmse_worse: float
    confidence: float
    resamples: int

    @property
    def relative_difference(self) -> float:
        return relative_difference(self.rmse_better, self.rmse_worse)

    def to_dict(self) -> Dict[str, float]:
        return {
            "better": self.better,
            "worse": self.worse,
            "rmse_better": self.rmse_better,
            "rmse_worse": self.rmse_worse,
            "confidence": self.confidence,
            "relative_difference": self.relative_difference,
        }


def paired_bootstrap(
    better_runs: np.ndarray,
    worse_runs: np.ndarray,
    resamples: int = 2000,
    seed: int = 0,
    better: str = "a",
    worse: str = "b",
) -> BootstrapComparison:
    """
    Paired bootstrap over runs.

    Both inputs are per-run time-averaged squared errors from the same runs;
    resampling draws run indices once and applies them to both.

    Args:
        better_runs: Values of the curve claimed to be smaller
        worse_runs: Values of the curve claimed to be larger
        resamples: Number of bootstrap resamples
        seed: Seed for the resampling generator
    """
    a = np.asarray(better_runs, dtype=float)
    b = np.asarray(worse_runs, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise InvalidParameterError("paired bootstrap needs two equally long, non-empty run vectors")
    if resamples < 1:
        raise InvalidParameterError("resamples must be positive")

    rng = np.random.default_rng(seed)
    indices = rng.integers(0, a.size, size=(resamples, a.size))
    wins = (a[indices].mean(axis=1) < b[indices].mean(axis=1)).mean()
    return BootstrapComparison(
        better=better,
        worse=worse,
        rmse_better=float(np.sqrt(a.mean())),
        rmse_worse=float(np.sqrt(b.mean())),
        confidence=float(wins),
        resamples=resamples,
    )


def relative_difference(value: float, reference: float) -> float:
    """|value − reference| / reference."""
    if reference == 0:
        return 0.0 if value == 0 else float("inf")
    return abs(value - reference) / abs(reference)


def bound_violations(
    mse_matrix: np.ndarray,
    bound_matrix: np.ndarray,
    sigmas: float = 3.0,
) -> np.ndarray:
    """
    Time steps k >= 1 where the Monte Carlo MSE is below the mean bound by more
    than ``sigmas`` standard errors.
    """
    mse_matrix = np.atleast_2d(np.asarray(mse_matrix, dtype=float))
    bound = np.atleast_2d(np.asarray(bound_matrix, dtype=float)).mean(axis=0)
    runs = mse_matrix.shape[0]
    mse = mse_matrix.mean(axis=0)
    stderr = mse_matrix.std(axis=0, ddof=1) / np.sqrt(runs) if runs > 1 else np.zeros_like(mse)
    below = mse < bound - sigmas * stderr
    below[0] = False
    return np.flatnonzero(below)


def comparison_pairs(labels: List[str], forward_labels: List[str]) -> List[tuple]:
    """(inverse, forward) and (inverse, inverse) label pairs for the compare table."""
    inverse_labels = [label for label in labels if label not in forward_labels]
    pairs = [(inv, fwd) for inv in inverse_labels for fwd in forward_labels]
    pairs += [(a, b) for i, a in enumerate(inverse_labels) for b in inverse_labels[i + 1 :]]
    return pairs


def compare_curves(
    per_run: Dict[str, np.ndarray],
    pairs: List[tuple],
    resamples: int = 2000,
    seed: int = 0,
) -> List[BootstrapComparison]:
    return [
        paired_bootstrap(per_run[a], per_run[b], resamples=resamples, seed=seed, better=a, worse=b)
        for a, b in pairs
        if a in per_run and b in per_run
    ]


def time_average(summary: ExperimentSummary, curve: str) -> Optional[float]:
    entry = summary.curves.get(curve)
    return entry.rmse if entry is not None else None
