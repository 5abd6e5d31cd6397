"""
CSV outputs: long-format records, the summary table and per-curve plot data.

Floats are written with 17 significant digits so files round-trip exactly.
"""

import csv
import re
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Union

import numpy as np

from invfilter.errors import ConfigError
from invfilter.harness.schemas import ExperimentSummary, MonteCarloRecord, OutputSection, RecordRow
from invfilter.logging_config import get_logger

logger = get_logger(__name__)

RECORD_HEADER = ["run_id", "k", "curve", "value"]
SUMMARY_HEADER = ["curve", "rmse", "mean_square", "stderr", "runs_used", "runs_excluded", "delta"]
FAILURE_HEADER = ["run_id", "step", "curve", "message"]


def format_float(value: float) -> str:
    return format(float(value), ".17g")


@dataclass(frozen=True)
class OutputPaths:
    directory: Path
    records: Path
    summary: Path
    plot_prefix: str

    @classmethod
    def from_section(cls, section: OutputSection) -> "OutputPaths":
        directory = Path(section.directory)
        return cls(
            directory=directory,
            records=directory / section.records,
            summary=directory / section.summary,
            plot_prefix=section.plot_prefix,
        )

    @property
    def failures(self) -> Path:
        return self.directory / "failures.csv"

    def plot_file(self, curve: str) -> Path:
        slug = re.sub(r"[^A-Za-z0-9_.-]+", "_", curve)
        return self.directory / f"{self.plot_prefix}_{slug}.csv"


def write_records(rows: Iterable[RecordRow], path: Path) -> int:
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RECORD_HEADER)
        for row in rows:
            writer.writerow([row.run_id, row.k, row.curve, format_float(row.value)])
            count += 1
    return count


def write_summary(summary: ExperimentSummary, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for name, entry in summary.curves.items():
            writer.writerow(
                [
                    name,
                    format_float(entry.rmse),
                    format_float(entry.mean_square),
                    format_float(entry.stderr),
                    entry.runs_used,
                    summary.runs_excluded,
                    format_float(summary.deltas.get(name, 0.0)),
                ]
            )


def write_plot_data(summary: ExperimentSummary, paths: OutputPaths, averaging: str = "cumulative") -> List[Path]:
    """One headerless ``k,value`` file per curve: cumulative time-averaged RMSE or per-step RMSE."""
    written = []
    for name, entry in summary.curves.items():
        values = entry.cumulative if averaging == "cumulative" else np.sqrt(entry.per_step)
        path = paths.plot_file(name)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            for k, value in enumerate(values):
                writer.writerow([k, format_float(value)])
        written.append(path)
    return written


def emit_outputs(
    rows: Iterable[RecordRow],
    summary: ExperimentSummary,
    paths: OutputPaths,
    averaging: str = "cumulative",
) -> Dict[str, Union[Path, List[Path]]]:
    """
    Write the records table, the summary and the plot files.

    Raises:
        OSError: a path cannot be created or written
    """
    paths.directory.mkdir(parents=True, exist_ok=True)
    paths.records.parent.mkdir(parents=True, exist_ok=True)
    paths.summary.parent.mkdir(parents=True, exist_ok=True)

    count = write_records(rows, paths.records)
    write_summary(summary, paths.summary)
    plots = write_plot_data(summary, paths, averaging)
    written: Dict[str, Union[Path, List[Path]]] = {"records": paths.records, "summary": paths.summary, "plots": plots}

    if summary.failures:
        with open(paths.failures, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(FAILURE_HEADER)
            for failure in summary.failures:
                writer.writerow([failure.run_id, failure.step, failure.curve, failure.message])
        written["failures"] = paths.failures

    logger.info(
        "Outputs written",
        records=str(paths.records),
        rows=count,
        summary=str(paths.summary),
        plot_files=len(plots),
    )
    return written


def read_records(path: Union[str, Path]) -> List[MonteCarloRecord]:
    """
    Parse a long-format records CSV back into per-run records.

    Raises:
        ConfigError: the header is not run_id,k,curve,value or steps are missing
    """
    values: Dict[int, Dict[str, Dict[int, float]]] = defaultdict(lambda: defaultdict(dict))
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != RECORD_HEADER:
            raise ConfigError(f"{path} is not a records file (header {header})")
        for line in reader:
            if not line:
                continue
            run_id, k, curve, value = line
            values[int(run_id)][curve][int(k)] = float(value)

    records = []
    for run_id in sorted(values):
        curves = {}
        for curve, steps in values[run_id].items():
            if sorted(steps) != list(range(len(steps))):
                raise ConfigError(f"curve {curve!r} of run {run_id} has missing steps")
            curves[curve] = np.array([steps[k] for k in range(len(steps))])
        records.append(MonteCarloRecord(run_id=run_id, curves=curves))
    return records


def curve_matrices(records: Iterable[MonteCarloRecord]) -> Dict[str, np.ndarray]:
    """runs × (K + 1) matrix per curve, rows in run_id order."""
    grouped: Dict[str, List[np.ndarray]] = defaultdict(list)
    for record in sorted(records, key=lambda r: r.run_id):
        if record.failed:
            continue
        for curve, series in record.curves.items():
            grouped[curve].append(series)
    return {curve: np.array(rows) for curve, rows in sorted(grouped.items())}
