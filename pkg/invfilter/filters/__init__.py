"""
Forward (adversary) and inverse (defender) estimators.
"""

from invfilter.filters.forward import FilterKind, FilterState, run_forward_filter
from invfilter.filters.inverse import InverseFilterState, SigmaStarAnchor, run_inverse_filter

__all__ = [
    "FilterKind",
    "FilterState",
    "InverseFilterState",
    "SigmaStarAnchor",
    "run_forward_filter",
    "run_inverse_filter",
]
