"""Network construction, gadget attachment and validation."""

from __future__ import annotations

import math

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
    validate_network,
    validation_errors,
)

from conftest import toy_network

from oracles import bfs_reachable


def test_toy_counts():
    net = toy_network("a")
    assert len(net.nodes) == 4
    assert len(net.edges) == 5
    net_c = toy_network("c")
    # two options -> two aux nodes, four gadget edges
    assert len(net_c.nodes) == 6
    assert len(net_c.edges) == 9
    assert sorted(e.id for e in net_c.edges if e.is_gadget) == [
        "m1",
        "m1_ret",
        "m2",
        "m2_ret",
    ]


def test_gadget_attrs():
    net = toy_network("c")
    # full recharge: entry battery cost is -b_max, price is the option's
    assert net.battery_cost("c0", "m1") == -6.0
    assert net.price("c0", "m1") == 0.0
    assert net.battery_cost("c0", "m2") == -6.0
    assert net.price("c0", "m2") == 7.0
    assert net.battery_cost("c0", "m1_ret") == 0.0
    assert net.edge("m1").transit_time == 1.5
    assert net.edge("m2").transit_time == 1.0
    assert net.edge("m1_ret").transit_time == pytest.approx(1e-6)


def test_delta_recharge_and_compatibility():
    base = Network(
        ["s", "t"],
        [Edge("e", "s", "t", 1.0, 1.0)],
        [
            Commodity("c0", "s", "t", ((0.0, 1.0, 1.0),), 2.0, 4.0),
            Commodity("c1", "s", "t", ((0.0, 1.0, 1.0),), 2.0, 4.0),
        ],
    )
    ext = build_battery_extended_network(
        base,
        [
            ChargingStation(
                "s",
                (
                    ChargeOption(
                        "m", 0.5, 1.0, delta=1.5, compatible=frozenset({"c0"})
                    ),
                ),
            )
        ],
    )
    assert ext.battery_cost("c0", "m") == -1.5
    assert math.isinf(ext.battery_cost("c1", "m"))
    assert ext.price("c0", "m") == 1.0


def test_uncapacitated_resolution():
    net = toy_network("a")
    # e4 has nu = None in the raw data; resolved value must never bind:
    # at least total inflow sup plus capacities into its tail
    e4 = net.edge("e4")
    assert e4.capacity is not None
    assert e4.capacity >= 3.0 + net.edge("e3").capacity


def test_uncapacitated_cycle_resolution():
    # two mutually uncapacitated edges still resolve to finite values
    net = resolve_capacities(
        Network(
            ["a", "b"],
            [Edge("x", "a", "b", 1.0, None), Edge("y", "b", "a", 1.0, None)],
            [Commodity("c0", "a", "b", ((0.0, 1.0, 2.0),), 1.0, 1.0)],
        )
    )
    assert all(e.capacity is not None and e.capacity > 2.0 for e in net.edges)


def test_return_edge_capacity_never_binds():
    net = toy_network("c")
    ret = net.edge("m1_ret")
    assert ret.capacity >= net.edge("m1").capacity


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        Network(
            ["a", "b"],
            [Edge("e", "a", "b", 1.0, 1.0), Edge("e", "b", "a", 1.0, 1.0)],
            [],
        )
    with pytest.raises(ValueError):
        Network(["a", "a"], [], [])


def test_station_mode_collision_rejected():
    base = Network(
        ["s", "t"],
        [Edge("m", "s", "t", 1.0, 1.0)],
        [Commodity("c0", "s", "t", ((0.0, 1.0, 1.0),), 1.0, 1.0)],
    )
    with pytest.raises(ValueError):
        build_battery_extended_network(
            base,
            [ChargingStation("s", (ChargeOption("m", 1.0, full_recharge=True),))],
        )


def test_validate_clean_instances():
    for variant in "abc":
        assert validation_errors(validate_network(toy_network(variant))) == []


def test_validate_catches_errors():
    net = Network(
        ["s", "t", "x"],
        [
            Edge("bad_tau", "s", "t", 0.0, 1.0),
            Edge("bad_nu", "s", "t", 1.0, -1.0),
        ],
        [
            Commodity("c0", "s", "t", ((0.0, 1.0, 1.0),), 5.0, 4.0),
            Commodity("lost", "x", "s", ((0.0, 1.0, 1.0),), 1.0, 4.0),
        ],
    )
    codes = {d.code for d in validation_errors(validate_network(net))}
    assert "nonpositive_transit_time" in codes
    assert "nonpositive_capacity" in codes
    assert "initial_battery_out_of_range" in codes
    assert "sink_unreachable" in codes


def test_reachability_matches_bfs_oracle():
    for variant in "abc":
        net = toy_network(variant)
        for c in net.commodities:
            assert c.sink in bfs_reachable(net, c.id, c.source)
    # closing the only path makes the sink unreachable
    net = Network(
        ["s", "m", "t"],
        [Edge("a", "s", "m", 1.0, 1.0), Edge("b", "m", "t", 1.0, 1.0)],
        [Commodity("c0", "s", "t", ((0.0, 1.0, 1.0),), 1.0, 1.0)],
        {("c0", "b"): EdgeAttrs(math.inf, 0.0)},
    )
    assert "t" not in bfs_reachable(net, "c0", "s")
    codes = {d.code for d in validation_errors(validate_network(net))}
    assert "sink_unreachable" in codes


def test_aggregation_variants():
    lam = AggregationSpec("lambda", 2.0)
    lamt = AggregationSpec("lambda_tilde", 0.5)
    assert lam.cost(3.0, 4.0) == 10.0
    assert lamt.cost(3.0, 4.0) == 5.0
    with pytest.raises(ValueError):
        AggregationSpec("other", 1.0)


def test_inflow_helpers():
    c = Commodity("c0", "s", "t", ((0.0, 2.0, 3.0), (4.0, 5.0, 1.0)), 1.0, 1.0)
    assert c.inflow_rate(1.0) == 3.0
    assert c.inflow_rate(3.0) == 0.0
    assert c.inflow_sup() == 3.0
    assert c.inflow_support_end() == 5.0
    assert c.inflow_total() == 7.0
    assert c.inflow_integral(1.0, 4.5) == 3.0 + 0.5
