"""
Command-line entry point.

    invfilter run <config>        Monte Carlo experiment, writes CSV outputs
    invfilter compare <config>    filter-matrix summary and paired bootstrap table on stdout
    invfilter rcrlb <config>      bound curves only
    invfilter diagnose <records>  boundedness fit of every error curve in a records file
"""

import argparse
import sys
from typing import Dict, List, Optional

import numpy as np

from invfilter import __version__
from invfilter.analytics import comparison_pairs, compare_curves, run_time_averages, summarize_records
from invfilter.config import config as runtime_config
from invfilter.errors import ConfigError, InvFilterError
from invfilter.harness.diagnostics import DEFAULT_MAX_VIOLATION, MIN_RUNS, boundedness_diagnostic
from invfilter.harness.experiment import run_experiment
from invfilter.harness.outputs import OutputPaths, curve_matrices, emit_outputs, read_records
from invfilter.harness.schemas import (
    BOUND_PREFIX,
    ERROR_PREFIX,
    ExperimentConfig,
    ExperimentSummary,
    forward_label,
    load_experiment_config,
    parse_experiment_config,
)
from invfilter.logging_config import get_logger, set_global_level
from invfilter.telemetry import configure_otel

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _load(args) -> ExperimentConfig:
    experiment = load_experiment_config(args.config)
    overrides = {}
    for name in ("runs", "horizon", "seed", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "output_dir", None):
        overrides["outputs"] = experiment.outputs.model_copy(update={"directory": args.output_dir})
    if overrides:
        experiment = parse_experiment_config({**experiment.model_dump(), **overrides})
    return experiment


def _print_summary(summary: ExperimentSummary) -> None:
    print(f"{'curve':<32}{'rmse':>14}{'stderr':>14}{'runs':>8}")
    for name, entry in summary.curves.items():
        print(f"{name:<32}{entry.rmse:>14.6g}{entry.stderr:>14.3g}{entry.runs_used:>8d}")
    if summary.failures:
        print(f"excluded runs: {summary.runs_excluded} of {summary.runs_total}")


def cmd_run(args) -> int:
    experiment = _load(args)
    result = run_experiment(experiment)
    paths = OutputPaths.from_section(experiment.outputs)
    emit_outputs(result.rows(), result.summary, paths, experiment.averaging)
    _print_summary(result.summary)
    return EXIT_OK


def cmd_compare(args) -> int:
    experiment = _load(args)
    result = run_experiment(experiment)
    _print_summary(result.summary)

    per_run: Dict[str, np.ndarray] = {}
    for name in result.summary.curves:
        if name.startswith(ERROR_PREFIX):
            per_run[name[len(ERROR_PREFIX) :]] = run_time_averages(result.curve_matrix(name))
    forward_labels = [forward_label(kind) for kind in experiment.filters.forward]
    pairs = comparison_pairs(list(per_run), forward_labels)
    comparisons = compare_curves(per_run, pairs, resamples=args.resamples, seed=experiment.seed)

    print()
    print(f"{'better':<20}{'worse':<20}{'rmse':>12}{'rmse':>12}{'confidence':>12}{'rel.diff':>10}")
    for item in comparisons:
        print(
            f"{item.better:<20}{item.worse:<20}{item.rmse_better:>12.5g}{item.rmse_worse:>12.5g}"
            f"{item.confidence:>12.3f}{item.relative_difference:>10.3f}"
        )
    return EXIT_OK


def cmd_rcrlb(args) -> int:
    experiment = _load(args)
    if not experiment.rcrlb:
        experiment = experiment.model_copy(update={"rcrlb": True})
    result = run_experiment(experiment)
    bound_records = [record for record in result.records if not record.failed]
    for record in bound_records:
        record.curves = {name: values for name, values in record.curves.items() if name.startswith(BOUND_PREFIX)}
    summary = summarize_records(bound_records)
    summary.failures = result.summary.failures
    summary.runs_total = result.summary.runs_total
    rows = (row for record in bound_records for row in record.rows())
    emit_outputs(rows, summary, OutputPaths.from_section(experiment.outputs), experiment.averaging)
    _print_summary(summary)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    matrices = curve_matrices(read_records(args.records))
    curves: List[str] = [args.curve] if args.curve else [c for c in matrices if c.startswith(ERROR_PREFIX)]
    missing = [curve for curve in curves if curve not in matrices]
    if missing:
        raise ConfigError(f"curves not found in {args.records}: {', '.join(missing)}")

    print(f"{'curve':<32}{'eta':>10}{'lambda':>10}{'nu':>14}{'violations':>12}{'bounded':>9}")
    for curve in curves:
        report = boundedness_diagnostic(
            matrices[curve], max_violation=args.max_violation, min_runs=args.min_runs
        )
        print(
            f"{curve:<32}{report.eta:>10.4g}{report.lam:>10.4g}"
            f"{report.nu:>14.6g}{report.violation_fraction:>12.3f}{str(report.feasible):>9}"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invfilter", description="Forward and inverse UKF/EKF Monte Carlo experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default=None,
        type=str.upper,
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        help="Override LOG_LEVEL",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_parser(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="Experiment YAML file")
        p.add_argument("--runs", type=int, default=None, help="Override the number of runs")
        p.add_argument("--horizon", type=int, default=None, help="Override the horizon")
        p.add_argument("--seed", type=int, default=None, help="Override the seed")
        p.add_argument("--workers", type=int, default=None, help="Worker processes (default INVFILTER_WORKERS)")
        return p

    run_p = experiment_parser("run", "Run an experiment and write CSV outputs")
    run_p.add_argument("--output-dir", default=None, help="Override outputs.directory")
    run_p.set_defaults(handler=cmd_run)

    compare_p = experiment_parser("compare", "Print the filter-matrix summary with paired bootstrap confidences")
    compare_p.add_argument("--resamples", type=int, default=2000, help="Bootstrap resamples")
    compare_p.set_defaults(handler=cmd_compare)

    rcrlb_p = experiment_parser("rcrlb", "Write bound curves only")
    rcrlb_p.add_argument("--output-dir", default=None, help="Override outputs.directory")
    rcrlb_p.set_defaults(handler=cmd_rcrlb)

    diagnose_p = sub.add_parser("diagnose", help="Fit exponential boundedness envelopes to a records file")
    diagnose_p.add_argument("records", help="Long-format records CSV")
    diagnose_p.add_argument("--curve", default=None, help="Single error curve, e.g. err:iukf_1")
    diagnose_p.add_argument("--max-violation", type=float, default=DEFAULT_MAX_VIOLATION)
    diagnose_p.add_argument("--min-runs", type=int, default=MIN_RUNS)
    diagnose_p.set_defaults(handler=cmd_diagnose)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        set_global_level(args.log_level)

    validation = runtime_config.validate()
    if not validation["valid"]:
        logger.error("Configuration validation failed", issues=validation["issues"])
        return EXIT_CONFIG
    configure_otel()

    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error("Invalid configuration", error=e, command=args.command)
        return EXIT_CONFIG
    except OSError as e:
        logger.error("I/O failure", error=e, command=args.command)
        return EXIT_IO
    except InvFilterError as e:
        logger.error("Numerical failure", error=e, command=args.command)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
