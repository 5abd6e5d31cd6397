"""
Forward and inverse unscented/extended Kalman filters, recursive Cramér–Rao
bounds and a Monte Carlo harness for counter-adversarial estimation.
"""

__version__ = "0.1.0"

from invfilter.core.statespace import NonlinearStateSpaceModel, simulate_trajectory  # noqa: E402
from invfilter.filters import (  # noqa: E402
    FilterKind,
    FilterState,
    InverseFilterState,
    SigmaStarAnchor,
    run_forward_filter,
    run_inverse_filter,
)
from invfilter.scenarios import build_scenario  # noqa: E402

__all__ = [
    "__version__",
    "FilterKind",
    "FilterState",
    "InverseFilterState",
    "NonlinearStateSpaceModel",
    "SigmaStarAnchor",
    "build_scenario",
    "run_forward_filter",
    "run_inverse_filter",
    "simulate_trajectory",
]
