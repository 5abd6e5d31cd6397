"""
Tests for OpenTelemetry setup in the parent process and in pool workers.
"""

import pytest

from invfilter import telemetry


@pytest.fixture
def fresh_telemetry(mocker):
    """Module globals reset for the test and restored afterwards."""
    for name in ("tracer", "meter", "runs_counter", "failures_counter", "run_duration_histogram", "_provider"):
        mocker.patch.object(telemetry, name, None)
    mocker.patch.object(telemetry, "_worker_process", False)
    return telemetry


class TestTelemetry:
    def test_disabled_by_default(self, fresh_telemetry, mocker):
        """Test nothing is configured when OTEL_ENABLED is off."""
        mocker.patch.object(telemetry.config, "OTEL_ENABLED", False)
        assert telemetry.configure_otel() is False
        assert telemetry.tracer is None
        with telemetry.trace_operation("montecarlo.run") as span:
            assert span is None

    def test_worker_initializer_configures_own_provider(self, fresh_telemetry, mocker):
        """Test a pool worker gets a tracer bound to its own provider."""
        mocker.patch.object(telemetry.config, "OTEL_ENABLED", True)
        mocker.patch.object(telemetry.config, "OTEL_CONSOLE_EXPORT", False)
        mocker.patch.object(telemetry.config, "PROJECT_ID", None)

        telemetry.init_worker()

        assert telemetry.in_worker()
        assert telemetry.tracer is not None
        with telemetry.trace_operation("montecarlo.run", {"run_id": 3}) as span:
            assert span.is_recording()

    def test_flush_exports_through_provider(self, fresh_telemetry, mocker):
        """Test flushing forwards to the configured provider."""
        mocker.patch.object(telemetry.config, "OTEL_ENABLED", True)
        mocker.patch.object(telemetry.config, "OTEL_CONSOLE_EXPORT", False)
        mocker.patch.object(telemetry.config, "PROJECT_ID", None)
        telemetry.configure_otel()
        flush = mocker.spy(telemetry._provider, "force_flush")

        telemetry.flush_telemetry(timeout_millis=100)

        flush.assert_called_once_with(100)

    def test_flush_without_provider_is_noop(self, fresh_telemetry):
        """Test flushing before configuration does nothing."""
        telemetry.flush_telemetry()

    def test_record_run_counts_failures(self, fresh_telemetry, mocker):
        """Test run metrics go to the run and failure counters."""
        runs = mocker.patch.object(telemetry, "runs_counter", mocker.Mock())
        failures = mocker.patch.object(telemetry, "failures_counter", mocker.Mock())
        histogram = mocker.patch.object(telemetry, "run_duration_histogram", mocker.Mock())

        telemetry.record_run(0.5, "linear", failed=True)

        runs.add.assert_called_once_with(1, {"scenario": "linear"})
        failures.add.assert_called_once_with(1, {"scenario": "linear"})
        histogram.record.assert_called_once_with(0.5, {"scenario": "linear"})
