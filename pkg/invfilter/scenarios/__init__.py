"""
Scenario registry.
"""

from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from invfilter.core.statespace import NonlinearStateSpaceModel
from invfilter.errors import ConfigError
from invfilter.scenarios.base import InitialConditions, ScenarioConfig
from invfilter.scenarios.fm import fm_demodulator_model
from invfilter.scenarios.linear import linear_toy_model
from invfilter.scenarios.reentry import reentry_model

ScenarioFactory = Callable[[Optional[Mapping[str, Any]]], Tuple[NonlinearStateSpaceModel, ScenarioConfig]]

SCENARIOS: Dict[str, ScenarioFactory] = {
    "fm_demodulator": fm_demodulator_model,
    "reentry": reentry_model,
    "linear": linear_toy_model,
}


def build_scenario(
    name: str,
    parameters: Optional[Mapping[str, Any]] = None,
) -> Tuple[NonlinearStateSpaceModel, ScenarioConfig]:
    """Look up a scenario by name and build it with parameter overrides."""
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(sorted(SCENARIOS))}")
    return SCENARIOS[name](parameters)


__all__ = [
    "SCENARIOS",
    "InitialConditions",
    "ScenarioConfig",
    "build_scenario",
    "fm_demodulator_model",
    "linear_toy_model",
    "reentry_model",
]
