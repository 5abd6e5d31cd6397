"""
Experiment configuration and Monte Carlo record types.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Literal, NamedTuple, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from invfilter.errors import ConfigError
from invfilter.filters.forward import FilterKind
from invfilter.filters.inverse import SigmaStarAnchor


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ScenarioSection(StrictModel):
    name: str = Field(..., description="Scenario identifier: fm_demodulator, reentry or linear")
    parameters: Dict[str, Any] = Field(default_factory=dict, description="Overrides of the scenario constants")


class InverseVariant(StrictModel):
    """One inverse filter run against one forward filter's action stream."""

    name: str = Field(..., description="Curve label, e.g. iukf_1")
    kind: FilterKind = Field(default=FilterKind.UKF, description="Inverse estimator: ukf → IUKF, ekf → IEKF")
    true_forward: FilterKind = Field(default=FilterKind.UKF, description="Forward filter the adversary actually runs")
    assumed_forward: FilterKind = Field(..., description="Forward filter the defender believes the adversary runs")
    assumed_kappa: Optional[float] = Field(
        default=None, description="Adversary κ assumed by the defender; defaults to the scenario preset"
    )

    @property
    def matched(self) -> bool:
        return self.true_forward == self.assumed_forward


class FilterSection(StrictModel):
    forward: List[FilterKind] = Field(default_factory=lambda: [FilterKind.UKF, FilterKind.EKF])
    inverse: List[InverseVariant] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_variants(self) -> "FilterSection":
        if not self.forward:
            raise ValueError("at least one forward filter is required")
        if len(set(self.forward)) != len(self.forward):
            raise ValueError("forward filters must be distinct")
        names = [variant.name for variant in self.inverse]
        if len(set(names)) != len(names):
            raise ValueError("inverse variant names must be unique")
        for variant in self.inverse:
            if variant.true_forward not in self.forward:
                raise ValueError(
                    f"inverse variant {variant.name!r} runs against forward {variant.true_forward.value}, "
                    "which is not in the forward list"
                )
        return self


class KappaSection(StrictModel):
    forward: Optional[float] = Field(default=None, description="True forward UKF κ")
    inverse: Optional[float] = Field(default=None, description="IUKF κ̄")


class OutputSection(StrictModel):
    directory: str = Field(default="results")
    records: str = Field(default="records.csv")
    summary: str = Field(default="summary.csv")
    plot_prefix: str = Field(default="plot")


class RegularizationSection(StrictModel):
    delta_scale: float = Field(default=1e-8, gt=0.0, description="δ scale for the forward process noise")
    inverse_delta_scale: float = Field(default=1e-6, gt=0.0, description="δ scale for K R Kᵀ")


class ExperimentConfig(StrictModel):
    """Validated contents of an experiment YAML file; omitted values fall back to the scenario preset."""

    scenario: ScenarioSection
    horizon: Optional[int] = Field(default=None, ge=1)
    runs: Optional[int] = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)
    filters: FilterSection = Field(default_factory=FilterSection)
    kappa: KappaSection = Field(default_factory=KappaSection)
    outputs: OutputSection = Field(default_factory=OutputSection)
    regularization: RegularizationSection = Field(default_factory=RegularizationSection)
    sigma_star_anchor: SigmaStarAnchor = Field(default=SigmaStarAnchor.PREVIOUS)
    position_indices: Optional[List[int]] = Field(default=None, description="Error/bound coordinates; all when unset")
    workers: Optional[int] = Field(default=None, ge=1)
    averaging: Literal["cumulative", "full"] = Field(default="cumulative")
    rcrlb: bool = Field(default=True, description="Compute bound curves")


def parse_experiment_config(data: Any) -> ExperimentConfig:
    """Validate a mapping; every validation problem becomes a ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError("experiment config must be a mapping at the top level")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e}") from e


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate an experiment YAML file.

    Raises:
        ConfigError: malformed YAML or invalid/unknown keys
        OSError: the file cannot be read
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"could not parse {path}: {e}") from e
    return parse_experiment_config(data)


# Records ----------------------------------------------------------------------

ERROR_PREFIX = "err:"
BOUND_PREFIX = "rcrlb:"


def error_curve(label: str) -> str:
    return f"{ERROR_PREFIX}{label}"


def bound_curve_name(label: str) -> str:
    return f"{BOUND_PREFIX}{label}"


def forward_label(kind: FilterKind) -> str:
    return f"forward_{FilterKind(kind).value}"


class RecordRow(NamedTuple):
    """One line of the long-format table."""

    run_id: int
    k: int
    curve: str
    value: float


@dataclass(frozen=True)
class RunFailure:
    run_id: int
    step: int
    curve: str
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {"run_id": self.run_id, "step": self.step, "curve": self.curve, "message": self.message}


@dataclass(eq=False)
class MonteCarloRecord:
    """
    Per-run curves over k = 0..K.

    ``err:*`` curves hold squared errors (‖x_k − x̂_k‖² for forward filters,
    ‖x̂_k − x̂̂_k‖² for inverse variants) and ``rcrlb:*`` curves the matching
    trace of the bound J⁻¹, both restricted to the configured coordinates.
    """

    run_id: int
    curves: Dict[str, np.ndarray] = field(default_factory=dict)
    failure: Optional[RunFailure] = None
    deltas: Dict[str, float] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def rows(self) -> Iterator[RecordRow]:
        for curve in sorted(self.curves):
            for k, value in enumerate(self.curves[curve]):
                yield RecordRow(self.run_id, k, curve, float(value))


@dataclass(eq=False)
class CurveSummary:
    """Aggregates of one curve over the runs that completed."""

    curve: str
    rmse: float
    mean_square: float
    stderr: float
    runs_used: int
    cumulative: np.ndarray
    per_step: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "curve": self.curve,
            "rmse": self.rmse,
            "mean_square": self.mean_square,
            "stderr": self.stderr,
            "runs_used": self.runs_used,
        }


@dataclass(eq=False)
class ExperimentSummary:
    curves: Dict[str, CurveSummary]
    runs_total: int
    failures: List[RunFailure] = field(default_factory=list)
    deltas: Dict[str, float] = field(default_factory=dict)

    @property
    def runs_excluded(self) -> int:
        return len(self.failures)

    def labels(self) -> List[str]:
        """Filter labels having an error curve, in curve order."""
        return [name[len(ERROR_PREFIX) :] for name in self.curves if name.startswith(ERROR_PREFIX)]


@dataclass(eq=False)
class ExperimentResult:
    records: List[MonteCarloRecord]
    summary: ExperimentSummary
    horizon: int
    seed: int

    def rows(self) -> Iterator[RecordRow]:
        for record in self.records:
            if not record.failed:
                yield from record.rows()

    def completed(self) -> List[MonteCarloRecord]:
        return [record for record in self.records if not record.failed]

    def curve_matrix(self, curve: str) -> np.ndarray:
        """Runs × (K + 1) matrix of one curve over completed runs."""
        rows: List[Tuple[int, np.ndarray]] = [(r.run_id, r.curves[curve]) for r in self.completed() if curve in r.curves]
        return np.array([values for _, values in sorted(rows, key=lambda item: item[0])])
