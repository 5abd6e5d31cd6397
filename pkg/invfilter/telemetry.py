"""
OpenTelemetry observability for Monte Carlo experiments.
Traces experiments and individual runs, counts completed and failed runs.
Exports spans to the console or to Google Cloud Trace when configured.
"""

import time
from contextlib import contextmanager
from typing import Dict, Optional

from opentelemetry import metrics, trace
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.resources import Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor, ConsoleSpanExporter

from invfilter.config import config
from invfilter.logging_config import get_logger

# Cloud Trace exporter is optional
try:
    from opentelemetry.exporter.cloud_trace import CloudTraceSpanExporter

    CLOUD_TRACE_AVAILABLE = True
except ImportError:
    CloudTraceSpanExporter = None
    CLOUD_TRACE_AVAILABLE = False

logger = get_logger(__name__)

# Global tracer and meter
tracer: Optional[trace.Tracer] = None
meter: Optional[metrics.Meter] = None

# Metrics
runs_counter: Optional[metrics.Counter] = None
failures_counter: Optional[metrics.Counter] = None
run_duration_histogram: Optional[metrics.Histogram] = None

_provider: Optional[TracerProvider] = None
_worker_process = False


def configure_otel(service_name: str = "invfilter") -> bool:
    """
    Configure OpenTelemetry tracing and metrics.

    Returns:
        True when telemetry was enabled
    """
    global tracer, meter, runs_counter, failures_counter, run_duration_histogram, _provider

    if not config.OTEL_ENABLED:
        return False

    resource = Resource.create(
        {
            "service.name": service_name,
            "deployment.environment": config.ENVIRONMENT,
        }
    )

    trace_provider = TracerProvider(resource=resource)
    if config.OTEL_CONSOLE_EXPORT:
        trace_provider.add_span_processor(BatchSpanProcessor(ConsoleSpanExporter()))
    if config.PROJECT_ID and CLOUD_TRACE_AVAILABLE:
        trace_provider.add_span_processor(BatchSpanProcessor(CloudTraceSpanExporter(project_id=config.PROJECT_ID)))
    trace.set_tracer_provider(trace_provider)
    # A forked worker keeps the parent's global provider, so spans go through this one
    tracer = trace_provider.get_tracer(__name__)
    _provider = trace_provider

    meter_provider = MeterProvider(resource=resource)
    metrics.set_meter_provider(meter_provider)
    meter = meter_provider.get_meter(__name__)

    runs_counter = meter.create_counter(
        name="montecarlo_runs_total",
        description="Monte Carlo runs completed",
        unit="1",
    )
    failures_counter = meter.create_counter(
        name="montecarlo_run_failures_total",
        description="Monte Carlo runs excluded after a numerical failure",
        unit="1",
    )
    run_duration_histogram = meter.create_histogram(
        name="montecarlo_run_seconds",
        description="Wall time of one Monte Carlo run",
        unit="s",
    )

    logger.info("OpenTelemetry configured", service=service_name, project_id=config.PROJECT_ID)
    return True


@contextmanager
def trace_operation(operation_name: str, attributes: Optional[Dict] = None):
    """
    Context manager for tracing operations.

    Usage:
        with trace_operation("run_experiment", {"scenario": "fm_demodulator"}):
            ...
    """
    if not tracer:
        yield None
        return

    with tracer.start_as_current_span(operation_name) as span:
        if attributes:
            for key, value in attributes.items():
                span.set_attribute(key, value)

        start_time = time.time()
        try:
            yield span
        except Exception as e:
            span.set_attribute("error", True)
            span.set_attribute("error.message", str(e))
            raise
        finally:
            span.set_attribute("duration_seconds", time.time() - start_time)


def record_run(duration_seconds: float, scenario: str, failed: bool = False):
    """Record metrics for one finished Monte Carlo run."""
    if runs_counter:
        runs_counter.add(1, {"scenario": scenario})
    if failed and failures_counter:
        failures_counter.add(1, {"scenario": scenario})
    if run_duration_histogram:
        run_duration_histogram.record(duration_seconds, {"scenario": scenario})


def init_worker(service_name: str = "invfilter") -> None:
    """Process-pool initializer: each worker exports through its own provider."""
    global _worker_process
    _worker_process = True
    configure_otel(service_name)


def in_worker() -> bool:
    return _worker_process


def flush_telemetry(timeout_millis: int = 5000) -> None:
    """
    Export buffered spans now.

    Pool workers exit without running atexit hooks, so they flush after every run.
    """
    if _provider is not None:
        _provider.force_flush(timeout_millis)
