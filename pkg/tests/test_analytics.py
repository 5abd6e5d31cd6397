"""
Tests for Monte Carlo aggregation.
Covers time-averaged RMSE, cumulative curves, failure exclusion and bootstrap comparisons.
"""

import numpy as np
import pytest

from invfilter.analytics import (
    bound_violations,
    compare_curves,
    comparison_pairs,
    cumulative_rmse,
    paired_bootstrap,
    relative_difference,
    run_time_averages,
    summarize_curve,
    summarize_records,
    time_average,
)
from invfilter.errors import InvalidParameterError
from invfilter.harness.schemas import MonteCarloRecord, RunFailure


class TestTimeAverages:
    """Test per-run and cumulative averaging."""

    def test_initial_step_excluded(self):
        """k = 0 does not enter the time average."""
        matrix = np.array([[100.0, 1.0, 3.0], [50.0, 2.0, 2.0]])
        np.testing.assert_allclose(run_time_averages(matrix), [2.0, 2.0])

    def test_needs_a_step_after_initial(self):
        """Test needs a step after initial."""
        with pytest.raises(InvalidParameterError):
            run_time_averages(np.ones((3, 1)))

    def test_cumulative_curve(self):
        """Entry 0 is √m₀, entry k the RMSE over steps 1..k."""
        curve = cumulative_rmse(np.array([9.0, 4.0, 16.0, 1.0]))
        np.testing.assert_allclose(curve, [3.0, 2.0, np.sqrt(10.0), np.sqrt(7.0)])

    def test_summarize_curve(self):
        """Test summarize curve."""
        matrix = np.array([[0.0, 1.0, 1.0], [0.0, 4.0, 4.0], [0.0, 1.0, 1.0], [0.0, 4.0, 4.0]])
        summary = summarize_curve("err:forward_ukf", matrix)

        assert summary.mean_square == pytest.approx(2.5)
        assert summary.rmse == pytest.approx(np.sqrt(2.5))
        assert summary.stderr == pytest.approx(np.std([1.0, 4.0, 1.0, 4.0], ddof=1) / 2.0)
        assert summary.runs_used == 4
        np.testing.assert_allclose(summary.per_step, [0.0, 2.5, 2.5])

    def test_single_run_has_zero_stderr(self):
        """Test single run has zero stderr."""
        assert summarize_curve("err:x", np.array([[1.0, 2.0]])).stderr == 0.0


class TestSummarizeRecords:
    """Test reduction of run records."""

    @pytest.fixture
    def records(self):
        return [
            MonteCarloRecord(run_id=2, curves={"err:a": np.array([1.0, 3.0])}, deltas={"rcrlb:a": 2e-8}),
            MonteCarloRecord(
                run_id=1,
                failure=RunFailure(run_id=1, step=4, curve="err:a", message="singular innovation covariance"),
            ),
            MonteCarloRecord(run_id=0, curves={"err:a": np.array([1.0, 1.0])}, deltas={"rcrlb:a": 1e-8}),
        ]

    def test_failed_runs_excluded(self, records):
        """Test failed runs excluded."""
        summary = summarize_records(records)
        assert summary.runs_total == 3
        assert summary.runs_excluded == 1
        assert summary.failures[0].step == 4
        assert summary.curves["err:a"].runs_used == 2
        assert summary.curves["err:a"].mean_square == pytest.approx(2.0)

    def test_order_does_not_matter(self, records):
        """Test order does not matter."""
        forward = summarize_records(records)
        backward = summarize_records(list(reversed(records)))
        assert forward.curves["err:a"].rmse == backward.curves["err:a"].rmse

    def test_largest_delta_kept(self, records):
        """Test largest delta kept."""
        assert summarize_records(records).deltas["rcrlb:a"] == pytest.approx(2e-8)

    def test_labels_and_lookup(self, records):
        """Test labels and lookup."""
        summary = summarize_records(records)
        assert summary.labels() == ["a"]
        assert time_average(summary, "err:a") == pytest.approx(np.sqrt(2.0))
        assert time_average(summary, "err:missing") is None


class TestPairedBootstrap:
    """Test paired bootstrap comparisons."""

    def test_clear_winner(self):
        """Test clear winner."""
        rng = np.random.default_rng(0)
        worse = rng.uniform(1.0, 2.0, size=100)
        better = 0.5 * worse
        result = paired_bootstrap(better, worse, resamples=500, seed=1, better="iukf_1", worse="forward_ukf")

        assert result.confidence == 1.0
        assert result.rmse_better < result.rmse_worse
        assert result.relative_difference == pytest.approx(1.0 - np.sqrt(0.5))
        assert result.to_dict()["better"] == "iukf_1"

    def test_identical_curves_never_win(self):
        """Test identical curves never win."""
        values = np.linspace(1.0, 2.0, 20)
        assert paired_bootstrap(values, values, resamples=200).confidence == 0.0

    def test_seeded(self):
        """Test seeded."""
        rng = np.random.default_rng(3)
        a, b = rng.uniform(size=30), rng.uniform(size=30)
        assert paired_bootstrap(a, b, seed=7).confidence == paired_bootstrap(a, b, seed=7).confidence

    def test_shape_mismatch(self):
        """Test shape mismatch."""
        with pytest.raises(InvalidParameterError):
            paired_bootstrap(np.ones(3), np.ones(4))

    def test_pairs(self):
        """Test pairs."""
        pairs = comparison_pairs(["forward_ukf", "iukf_1", "iekf_1"], ["forward_ukf"])
        assert pairs == [("iukf_1", "forward_ukf"), ("iekf_1", "forward_ukf"), ("iukf_1", "iekf_1")]

    def test_compare_skips_missing_curves(self):
        """Test compare skips missing curves."""
        per_run = {"iukf_1": np.ones(5), "forward_ukf": 2.0 * np.ones(5)}
        results = compare_curves(per_run, [("iukf_1", "forward_ukf"), ("iekf_1", "forward_ukf")], resamples=10)
        assert [(r.better, r.worse) for r in results] == [("iukf_1", "forward_ukf")]


class TestBoundChecks:
    """Test relative differences and bound violations."""

    def test_relative_difference(self):
        """Test relative difference."""
        assert relative_difference(1.1, 1.0) == pytest.approx(0.1)
        assert relative_difference(0.0, 0.0) == 0.0
        assert relative_difference(1.0, 0.0) == float("inf")

    def test_violation_detected(self):
        """Test violation detected."""
        mse = np.full((50, 4), 1.0) + np.linspace(-0.01, 0.01, 50)[:, None]
        bound = np.tile([5.0, 2.0, 0.5, 2.0], (50, 1))
        np.testing.assert_array_equal(bound_violations(mse, bound), [1, 3])

    def test_initial_step_never_flagged(self):
        """Test initial step never flagged."""
        mse = np.zeros((10, 2))
        bound = np.ones((10, 2))
        np.testing.assert_array_equal(bound_violations(mse, bound), [1])
