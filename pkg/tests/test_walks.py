"""Walk feasibility, visit bounds and enumeration."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from evflow.network import Commodity, Edge, EdgeAttrs, Network, resolve_capacities
from evflow.walks import (
    EnumerationLimits,
    battery_profile,
    build_catalog,
    enumerate_feasible_walks,
    is_energy_feasible,
    visit_bound_kappa,
    walk_price,
)

from conftest import toy_network
from oracles import brute_force_walks


def test_battery_profile_examples(toy_b, toy_c):
    # straight walk: 6 -4-> 2, -0-> 2, -2-> 0
    assert battery_profile(toy_b, "c0", ("e1", "e3", "e5")) == (2.0, 2.0, 0.0)
    # full recharge caps at capacity: 6->2->2->6->6->2
    assert battery_profile(toy_c, "c0", ("e1", "e3", "m1", "m1_ret", "e4")) == (
        2.0,
        2.0,
        6.0,
        6.0,
        2.0,
    )


def test_feasibility_reasons(toy_b, toy_c):
    ok, _ = is_energy_feasible(toy_b, "c0", ("e1", "e3", "e5"))
    assert ok
    ok, reason = is_energy_feasible(toy_b, "c0", ("e1", "e3", "e4"))
    assert not ok and "battery" in reason
    # m2 recharge is energy-fine but busts the price budget of 6
    ok, reason = is_energy_feasible(toy_c, "c0", ("e1", "e3", "m2", "m2_ret", "e4"))
    assert not ok and "price" in reason


def test_recuperation_caps_at_capacity():
    net = resolve_capacities(
        Network(
            ["s", "m", "t"],
            [Edge("a", "s", "m", 1.0, 1.0), Edge("b", "m", "t", 1.0, 1.0)],
            [Commodity("c0", "s", "t", ((0.0, 1.0, 1.0),), 3.0, 4.0)],
            {("c0", "a"): EdgeAttrs(-9.0, 0.0), ("c0", "b"): EdgeAttrs(4.0, 0.0)},
        )
    )
    assert battery_profile(net, "c0", ("a", "b")) == (4.0, 0.0)
    assert is_energy_feasible(net, "c0", ("a", "b"))[0]


def test_visit_bound_two_node_loop():
    # cycle cost 2 + 1 = 3, capacity 6 -> at most ceil(6/3) = 2 visits
    net = Network(
        ["v", "w", "t"],
        [
            Edge("f", "v", "w", 1.0, 1.0),
            Edge("g", "w", "v", 1.0, 1.0),
            Edge("h", "v", "t", 1.0, 1.0),
        ],
        [Commodity("c0", "v", "t", ((0.0, 1.0, 1.0),), 6.0, 6.0)],
        {
            ("c0", "f"): EdgeAttrs(2.0, 0.0),
            ("c0", "g"): EdgeAttrs(1.0, 0.0),
            ("c0", "h"): EdgeAttrs(0.0, 0.0),
        },
    )
    kappa, fallback = visit_bound_kappa(net, "c0")
    assert (kappa, fallback) == (2, False)


def test_visit_bound_no_positive_cycle(toy_c):
    # the only cycles are the recharge gadgets with negative sums
    kappa, fallback = visit_bound_kappa(toy_c, "c0")
    assert fallback
    assert kappa == 3


def test_visit_bound_override(toy_c):
    kappa, fallback = visit_bound_kappa(
        toy_c, "c0", EnumerationLimits(kappa_override=7)
    )
    assert (kappa, fallback) == (7, False)


def test_toy_walk_counts():
    for variant, expected in (("a", 4), ("b", 3), ("c", 7)):
        walks, truncated = enumerate_feasible_walks(toy_network(variant), "c0")
        assert not truncated
        assert len(walks) == expected, variant


def test_toy_catalog_contents(toy_c):
    walks, _ = enumerate_feasible_walks(toy_c, "c0")
    labels = [w.edges for w in walks]
    assert labels == sorted(labels)  # deterministic lexicographic order
    assert ("e1", "e3", "m1", "m1_ret", "e4") in labels
    assert ("e2", "e3", "e5") in labels
    # no walk uses the too-expensive fast mode
    assert all("m2" not in w.edges for w in walks)
    # derived constants on the recharging walk
    w4 = walks[labels.index(("e1", "e3", "m1", "m1_ret", "e4"))]
    assert w4.total_price == 0.0
    assert w4.free_flow_time == pytest.approx(1 + 1 + 1.5 + 1e-6 + 1)
    assert w4.min_battery == 2.0


def test_enumeration_matches_bruteforce():
    for variant in "abc":
        net = toy_network(variant)
        limits = EnumerationLimits(max_length=8)
        walks, _ = enumerate_feasible_walks(net, "c0", limits)
        kappa, _ = visit_bound_kappa(net, "c0", limits)
        expected = brute_force_walks(net, "c0", kappa, limits.max_length)
        assert [w.edges for w in walks] == expected


def test_enumeration_matches_bruteforce_with_partial_recharges():
    # positive two-node cycle plus a delta-recharge gadget on the way
    net = Network(
        ["s", "m", "x", "t"],
        [
            Edge("a", "s", "m", 1.0, 1.0),
            Edge("b", "m", "t", 1.0, 1.0),
            Edge("c", "m", "x", 1.0, 1.0),
            Edge("d", "x", "m", 1.0, 1.0),
            Edge("r", "m", "x", 0.5, 1.0),  # parallel cheap edge
        ],
        [Commodity("c0", "s", "t", ((0.0, 1.0, 1.0),), 3.0, 4.0)],
        {
            ("c0", "a"): EdgeAttrs(1.0, 0.0),
            ("c0", "b"): EdgeAttrs(2.0, 0.0),
            ("c0", "c"): EdgeAttrs(2.0, 0.0),
            ("c0", "d"): EdgeAttrs(-1.0, 0.0),
            ("c0", "r"): EdgeAttrs(1.0, 0.0),
        },
    )
    limits = EnumerationLimits(max_length=8)
    walks, _ = enumerate_feasible_walks(net, "c0", limits)
    kappa, _ = visit_bound_kappa(net, "c0", limits)
    expected = brute_force_walks(net, "c0", kappa, limits.max_length)
    assert [w.edges for w in walks] == expected
    assert walks, "expected at least one feasible walk"


def test_no_feasible_walk_flagged():
    net = resolve_capacities(
        Network(
            ["s", "t"],
            [Edge("e", "s", "t", 1.0, 1.0)],
            [Commodity("c0", "s", "t", ((0.0, 1.0, 1.0),), 1.0, 2.0)],
            {("c0", "e"): EdgeAttrs(3.0, 0.0)},
        )
    )
    catalog = build_catalog(net)
    assert catalog.walks["c0"] == []
    assert catalog.infeasible_commodities() == ["c0"]


def test_max_walks_truncation(toy_c):
    walks, truncated = enumerate_feasible_walks(
        toy_c, "c0", EnumerationLimits(max_walks=3)
    )
    assert truncated and len(walks) == 3


def test_max_length_cap(toy_c):
    walks, truncated = enumerate_feasible_walks(
        toy_c, "c0", EnumerationLimits(max_length=3)
    )
    assert not truncated
    assert all(len(w.edges) <= 3 for w in walks)
    assert len(walks) == 3  # the recharge walks need five edges


@st.composite
def random_small_network(draw):
    n_nodes = draw(st.integers(3, 5))
    nodes = [f"n{k}" for k in range(n_nodes)]
    n_edges = draw(st.integers(2, 7))
    edges = []
    attrs = {}
    for k in range(n_edges):
        tail, head = draw(
            st.tuples(st.integers(0, n_nodes - 1), st.integers(0, n_nodes - 1)).filter(
                lambda p: p[0] != p[1]
            )
        )
        edges.append(Edge(f"e{k}", nodes[tail], nodes[head], 1.0, 1.0))
        cost = draw(st.sampled_from([-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]))
        attrs[("c0", f"e{k}")] = EdgeAttrs(cost, 0.0)
    b_init = draw(st.sampled_from([0.0, 1.0, 2.0, 4.0]))
    b_max = draw(st.sampled_from([2.0, 4.0, 6.0]))
    c = Commodity(
        "c0", nodes[0], nodes[-1], ((0.0, 1.0, 1.0),), min(b_init, b_max), b_max
    )
    return Network(nodes, edges, [c], attrs)


@given(random_small_network())
@settings(max_examples=60, deadline=None)
def test_enumeration_equals_bruteforce_property(net):
    limits = EnumerationLimits(max_length=6)
    walks, truncated = enumerate_feasible_walks(net, "c0", limits)
    if truncated:
        return
    kappa, _ = visit_bound_kappa(net, "c0", limits)
    expected = brute_force_walks(net, "c0", kappa, limits.max_length)
    assert [w.edges for w in walks] == expected


@given(random_small_network())
@settings(max_examples=40, deadline=None)
def test_profiles_stay_in_window_property(net):
    walks, _ = enumerate_feasible_walks(net, "c0", EnumerationLimits(max_length=6))
    c = net.commodity("c0")
    for w in walks:
        assert all(0.0 <= lv <= c.battery_capacity for lv in w.battery_profile)
        assert w.battery_profile == battery_profile(net, "c0", w.edges)
        assert walk_price(net, "c0", w.edges) <= c.price_budget
        assert not math.isinf(w.free_flow_time)
