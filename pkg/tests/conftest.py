"""Instance builders shared across the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from evflow.network import (
    AggregationSpec,
    ChargeOption,
    ChargingStation,
    Commodity,
    Edge,
    EdgeAttrs,
    Network,
    build_battery_extended_network,
    resolve_capacities,
)


def toy_edges() -> list[Edge]:
    return [
        Edge("e1", "s", "u", 1.0, 2.0),
        Edge("e2", "s", "u", 2.0, 1.0),
        Edge("e3", "u", "v", 1.0, 1.0),
        Edge("e4", "v", "t", 1.0, None),
        Edge("e5", "v", "t", 2.0, 0.5),
    ]


TOY_BATTERY = {"e1": 4.0, "e2": 2.0, "e3": 0.0, "e4": 4.0, "e5": 2.0}


def toy_network(variant: str = "a") -> Network:
    """Four-node diamond with parallel routes.

    Variant "a": no energy constraints (all battery costs zero).
    Variant "b": battery costs on, capacity 6, no charging.
    Variant "c": variant "b" plus a station at v with a free slow mode (m1,
    duration 1.5) and an expensive fast mode (m2, duration 1, price 7) that a
    budget of 6 rules out.
    """
    variant = variant.lower()
    commodity = Commodity(
        id="c0",
        source="s",
        sink="t",
        inflow=((0.0, 10.0, 3.0),),
        initial_battery=6.0,
        battery_capacity=6.0,
        price_budget=6.0 if variant == "c" else math.inf,
        aggregation=AggregationSpec("lambda_tilde", 0.0),
    )
    attrs = {}
    if variant in ("b", "c"):
        attrs = {
            ("c0", eid): EdgeAttrs(b, 0.0) for eid, b in TOY_BATTERY.items()
        }
    net = Network(
        ["s", "u", "v", "t"],
        toy_edges(),
        [commodity],
        attrs,
        name=f"toy-{variant}",
    )
    if variant == "c":
        stations = [
            ChargingStation(
                "v",
                (
                    ChargeOption("m1", 1.5, 0.0, full_recharge=True),
                    ChargeOption("m2", 1.0, 7.0, full_recharge=True),
                ),
            )
        ]
        return build_battery_extended_network(net, stations)
    return resolve_capacities(net)


def single_edge_network(
    tau: float = 1.0,
    nu: float = 1.0,
    inflow: tuple[tuple[float, float, float], ...] = ((0.0, 1.0, 3.0),),
) -> Network:
    c = Commodity("c0", "s", "t", inflow, 1.0, 1.0)
    return resolve_capacities(
        Network(["s", "t"], [Edge("e", "s", "t", tau, nu)], [c])
    )


def parallel_network(
    n_parallel: int = 2,
    tau: tuple[float, ...] | None = None,
    nu: tuple[float, ...] | None = None,
    inflow: tuple[tuple[float, float, float], ...] = ((0.0, 2.0, 2.0),),
) -> Network:
    """s -> t with n parallel edges (identical by default)."""
    tau = tau or tuple(1.0 for _ in range(n_parallel))
    nu = nu or tuple(1.0 for _ in range(n_parallel))
    edges = [
        Edge(f"p{k}", "s", "t", tau[k], nu[k]) for k in range(n_parallel)
    ]
    c = Commodity("c0", "s", "t", inflow, 1.0, 1.0)
    return resolve_capacities(Network(["s", "t"], edges, [c]))


def random_loading_instance(rng: np.random.Generator):
    """Small network + aligned flow grid for loading comparisons.

    Transit times are multiples of 0.1 and flow breakpoints multiples of
    0.5, so forward-Euler grids with dt in {1e-2, 1e-3} align exactly.
    Returns (net, grid, split) where split are per-interval walk shares.
    """
    template = rng.integers(0, 3)
    taus = lambda: float(rng.integers(2, 11)) / 10.0  # noqa: E731
    nus = lambda: float(rng.choice([0.5, 1.0, 1.5, 2.0, 3.0]))  # noqa: E731
    if template == 0:
        # two parallel edges
        edges = [
            Edge("a", "s", "t", taus(), nus()),
            Edge("b", "s", "t", taus(), nus()),
        ]
        nodes = ["s", "t"]
    elif template == 1:
        # diamond: two roads to m, one out
        edges = [
            Edge("a", "s", "m", taus(), nus()),
            Edge("b", "s", "m", taus(), nus()),
            Edge("c", "m", "t", taus(), nus()),
        ]
        nodes = ["s", "m", "t"]
    else:
        # three two-hop routes sharing the middle node
        edges = [
            Edge("a", "s", "m", taus(), nus()),
            Edge("b", "s", "m", taus(), nus()),
            Edge("c", "m", "t", taus(), nus()),
            Edge("d", "m", "t", taus(), nus()),
            Edge("e", "s", "t", taus(), nus()),
        ]
        nodes = ["s", "m", "t"]
    n_pieces = int(rng.integers(1, 5))
    pieces = []
    t = 0.0
    for _ in range(n_pieces):
        width = 0.5 * float(rng.integers(1, 3))
        rate = float(rng.choice([0.5, 1.0, 2.0, 3.0, 4.0]))
        pieces.append((t, t + width, rate))
        t += width
    c = Commodity("c0", "s", "t", tuple(pieces), 1.0, 1.0)
    net = resolve_capacities(Network(nodes, edges, [c]))
    grid = np.arange(0.0, t + 0.25, 0.5)
    return net, grid


@pytest.fixture
def toy_a() -> Network:
    return toy_network("a")


@pytest.fixture
def toy_b() -> Network:
    return toy_network("b")


@pytest.fixture
def toy_c() -> Network:
    return toy_network("c")
