"""Approximate energy-feasible dynamic traffic equilibria for electric
vehicles under Vickrey point-queue congestion.

The pipeline: build a battery-extended network from an instance file,
enumerate energy-feasible walks, run the fixed-point loop (network loading,
midpoint costs, FP-Update, step-size rescale), then export metrics.
"""

__version__ = "0.1.0"

from .equilibrium import (
    EquilibriumResult,
    FixedPointConfig,
    IterationStats,
    fixed_point_residual,
    fp_update,
    midpoint_costs,
    run_fixed_point,
)
from .flows import WalkFlow, demand_targets, uniform_grid
from .instance import Instance, InstanceError, load_instance, parse_instance, save_instance
from .loading import LoadingOptions, LoadingResult, network_loading, verify_loading
from .metrics import energy_profile, energy_stats, qopi, travel_time_stats
from .network import (
    AggregationSpec,
    ChargeOption,
    ChargingStation,
    Commodity,
    Edge,
    EdgeAttrs,
    Network,
    build_battery_extended_network,
    validate_network,
)
from .walks import Walk, WalkCatalog, build_catalog, write_catalog

__all__ = [
    "__version__",
    "AggregationSpec",
    "ChargeOption",
    "ChargingStation",
    "Commodity",
    "Edge",
    "EdgeAttrs",
    "EquilibriumResult",
    "FixedPointConfig",
    "Instance",
    "InstanceError",
    "IterationStats",
    "LoadingOptions",
    "LoadingResult",
    "Network",
    "Walk",
    "WalkCatalog",
    "WalkFlow",
    "build_battery_extended_network",
    "build_catalog",
    "demand_targets",
    "energy_profile",
    "energy_stats",
    "fixed_point_residual",
    "fp_update",
    "load_instance",
    "midpoint_costs",
    "network_loading",
    "parse_instance",
    "qopi",
    "run_fixed_point",
    "save_instance",
    "travel_time_stats",
    "uniform_grid",
    "validate_network",
    "verify_loading",
    "write_catalog",
]
