"""
Scenario presets: the published constants and initial conditions that go
with a system model.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from invfilter.errors import ConfigError


@dataclass(frozen=True, eq=False)
class InitialConditions:
    """Per-run initial values: true state, forward and inverse initial estimates."""

    x0: np.ndarray
    x0hat: np.ndarray
    xhathat0: np.ndarray


InitialSampler = Callable[[np.random.Generator], InitialConditions]


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """
    Constants and initialisation of one experiment scenario.

    ``sampler`` draws the per-run initial conditions from the run's initial
    substream; Σ*₀ defaults to the forward Σ₀.
    """

    name: str
    parameters: Dict[str, Any]
    Sigma0: np.ndarray
    Sigma_bar0: np.ndarray
    kappa: float
    kappa_inv: float
    assumed_kappa: float
    horizon: int
    runs: int
    sampler: InitialSampler
    position_indices: Optional[Tuple[int, ...]] = None
    Sigma_star0: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.Sigma_star0 is None:
            object.__setattr__(self, "Sigma_star0", np.array(self.Sigma0, dtype=float))

    def draw_initial(self, rng: np.random.Generator) -> InitialConditions:
        return self.sampler(rng)


def resolve_parameters(name: str, defaults: Mapping[str, Any], overrides: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    """Merge overrides onto a scenario's defaults; unknown keys are rejected."""
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown parameters for scenario {name!r}: {', '.join(unknown)}")
    merged = dict(defaults)
    merged.update(overrides)
    return merged


def fixed_initial(x0, x0hat, xhathat0) -> InitialSampler:
    """Sampler returning the same initial conditions for every run."""
    conditions = InitialConditions(
        x0=np.asarray(x0, dtype=float),
        x0hat=np.asarray(x0hat, dtype=float),
        xhathat0=np.asarray(xhathat0, dtype=float),
    )

    def sample(rng: np.random.Generator) -> InitialConditions:
        return conditions

    return sample
