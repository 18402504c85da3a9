"""Deterministic figure generation from the solver's CSV run artifacts."""

__version__ = "0.1.0"

from .figures import KINDS, FigureSpec, build_figure, plot
from .readers import (
    SchemaError,
    read_catalog_labels,
    read_convergence,
    read_costs,
    read_energy_profile,
    read_energy_stats,
    read_travel_times,
    read_walk_flows,
)

__all__ = [
    "KINDS",
    "FigureSpec",
    "SchemaError",
    "__version__",
    "build_figure",
    "plot",
    "read_catalog_labels",
    "read_convergence",
    "read_costs",
    "read_energy_profile",
    "read_energy_stats",
    "read_travel_times",
    "read_walk_flows",
]
