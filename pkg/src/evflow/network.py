"""Network model for EV traffic over time.

Edges follow the Vickrey point-queue convention: an edge has a free-flow
transit time tau > 0 and a bottleneck capacity nu > 0; vehicles entering at
time theta leave at theta + tau + q(theta)/nu where q is the queue volume.
Battery consumption and money prices are commodity-dependent edge attributes,
so the same physical edge can cost different amounts of energy for different
vehicle classes. Recharging is modelled structurally: each charging option at
a node v becomes a two-edge cycle v -> aux -> v whose entry edge carries a
negative battery cost (an energy gain) and the option's duration, capacity and
price.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

UNCAP = None  # instance-file spelling: "nu": null
RETURN_EDGE_TIME = 1e-6

PHYSICAL = "physical"
RECHARGE = "recharge"
RECHARGE_RETURN = "recharge_return"


@dataclass(frozen=True)
class Edge:
    """Directed edge with Vickrey queue parameters.

    capacity may be None in un-built networks, meaning "effectively
    uncapacitated"; resolve_capacities replaces it by a provably
    never-binding finite value before any loading happens.
    """

    id: str
    tail: str
    head: str
    transit_time: float
    capacity: Optional[float]
    kind: str = PHYSICAL

    @property
    def is_gadget(self) -> bool:
        return self.kind != PHYSICAL


@dataclass(frozen=True)
class EdgeAttrs:
    """Per-(commodity, edge) battery cost and price.

    battery_cost > 0 drains the battery, < 0 charges it (recuperation or a
    recharge gadget edge), +inf marks an edge the commodity cannot use.
    """

    battery_cost: float = 0.0
    price: float = 0.0


@dataclass(frozen=True)
class AggregationSpec:
    """Scalarization of (travel time mu, total walk price P).

    variant "lambda":       cost = coeff * mu + P   (coeff in money/time)
    variant "lambda_tilde": cost = mu + coeff * P   (coeff in time/money)
    """

    variant: str = "lambda_tilde"
    coeff: float = 0.0

    def __post_init__(self) -> None:
        if self.variant not in ("lambda", "lambda_tilde"):
            raise ValueError(f"unknown aggregation variant {self.variant!r}")

    def cost(self, mu: float, price: float) -> float:
        if self.variant == "lambda":
            return self.coeff * mu + price
        return mu + self.coeff * price


@dataclass(frozen=True)
class Commodity:
    """One vehicle class with its own OD pair, inflow and battery model.

    inflow is a tuple of (start, end, rate) pieces with pairwise disjoint,
    ascending intervals; the inflow rate is the sum of rates of covering
    pieces (in practice pieces do not overlap) and zero elsewhere.
    """

    id: str
    source: str
    sink: str
    inflow: tuple[tuple[float, float, float], ...]
    initial_battery: float
    battery_capacity: float
    price_budget: float = math.inf
    aggregation: AggregationSpec = AggregationSpec()

    def inflow_rate(self, theta: float) -> float:
        return sum(r for (a, b, r) in self.inflow if a <= theta < b)

    def inflow_sup(self) -> float:
        return max((r for (_, _, r) in self.inflow), default=0.0)

    def inflow_support_end(self) -> float:
        return max((end for (_, end, _) in self.inflow), default=0.0)

    def inflow_integral(self, a: float, b: float) -> float:
        """Exact integral of the inflow rate over [a, b]."""
        total = 0.0
        for (s, e, r) in self.inflow:
            lo, hi = max(a, s), min(b, e)
            if hi > lo:
                total += r * (hi - lo)
        return total

    def inflow_total(self) -> float:
        return sum(r * (b - a) for (a, b, r) in self.inflow)


@dataclass(frozen=True)
class ChargeOption:
    """One charging mode at a station.

    Either full_recharge is True (charge to the commodity's capacity) or
    delta gives the energy gained. capacity None means uncapacitated.
    compatible restricts the option to the listed commodity ids; None means
    every commodity may use it.
    """

    mode: str
    duration: float
    price: float = 0.0
    full_recharge: bool = False
    delta: Optional[float] = None
    capacity: Optional[float] = None
    compatible: Optional[frozenset[str]] = None

    def __post_init__(self) -> None:
        if not self.full_recharge and self.delta is None:
            raise ValueError(f"option {self.mode!r}: needs delta or full_recharge")


@dataclass(frozen=True)
class ChargingStation:
    node: str
    options: tuple[ChargeOption, ...]


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.severity}] {self.code} ({self.subject}): {self.message}"


class Network:
    """Immutable-ish container for nodes, edges, commodities and attributes.

    attrs maps (commodity_id, edge_id) to EdgeAttrs; missing entries default
    to EdgeAttrs(0, 0). recharge_provenance maps gadget edge/node ids to
    (station node, mode, role) so downstream code can tell physical edges
    from recharge gadget edges.
    """

    def __init__(
        self,
        nodes: Sequence[str],
        edges: Sequence[Edge],
        commodities: Sequence[Commodity],
        attrs: Mapping[tuple[str, str], EdgeAttrs] | None = None,
        name: str = "",
        recharge_provenance: Mapping[str, tuple[str, str, str]] | None = None,
    ) -> None:
        self.name = name
        self.nodes: list[str] = list(nodes)
        self.edges: list[Edge] = list(edges)
        self.commodities: list[Commodity] = list(commodities)
        self.attrs: dict[tuple[str, str], EdgeAttrs] = dict(attrs or {})
        self.recharge_provenance: dict[str, tuple[str, str, str]] = dict(
            recharge_provenance or {}
        )
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node ids")
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate edge ids")
        cids = [c.id for c in self.commodities]
        if len(set(cids)) != len(cids):
            raise ValueError("duplicate commodity ids")
        self._edge_by_id = {e.id: e for e in self.edges}
        self._node_set = set(self.nodes)
        self._out: dict[str, list[Edge]] = {v: [] for v in self.nodes}
        self._in: dict[str, list[Edge]] = {v: [] for v in self.nodes}
        for e in self.edges:
            if e.tail not in self._node_set or e.head not in self._node_set:
                raise ValueError(f"edge {e.id}: endpoint not a node")
            self._out[e.tail].append(e)
            self._in[e.head].append(e)
        for adj in (self._out, self._in):
            for v in adj:
                adj[v].sort(key=lambda e: e.id)

    # -- lookups ---------------------------------------------------------

    def edge(self, edge_id: str) -> Edge:
        return self._edge_by_id[edge_id]

    def has_edge(self, edge_id: str) -> bool:
        return edge_id in self._edge_by_id

    def out_edges(self, node: str) -> list[Edge]:
        return self._out[node]

    def in_edges(self, node: str) -> list[Edge]:
        return self._in[node]

    def commodity(self, cid: str) -> Commodity:
        for c in self.commodities:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def edge_attrs(self, cid: str, edge_id: str) -> EdgeAttrs:
        return self.attrs.get((cid, edge_id), EdgeAttrs())

    def battery_cost(self, cid: str, edge_id: str) -> float:
        return self.edge_attrs(cid, edge_id).battery_cost

    def price(self, cid: str, edge_id: str) -> float:
        return self.edge_attrs(cid, edge_id).price

    def is_recharge_edge(self, edge_id: str) -> bool:
        return self._edge_by_id[edge_id].is_gadget

    def total_inflow_sup(self) -> float:
        return sum(c.inflow_sup() for c in self.commodities)

    def horizon(self) -> float:
        """Last time any commodity injects flow."""
        return max((c.inflow_support_end() for c in self.commodities), default=0.0)


def resolve_capacities(net: Network) -> Network:
    """Replace capacity=None by a finite never-binding value.

    The stand-in is sum_i sup u_i plus the capacities of all edges into the
    tail node, which bounds every rate that can ever be offered to the edge,
    so the queue on it stays empty no matter the flow. Unresolved incoming
    capacities are handled by iterating to a fixpoint; mutual dependence
    (a cycle of uncapacitated edges) falls back to using the inflow bound for
    the still-unresolved neighbours, which only makes the value larger.
    """
    base = net.total_inflow_sup()
    cap: dict[str, Optional[float]] = {e.id: e.capacity for e in net.edges}
    pending = [e for e in net.edges if e.capacity is None]
    while pending:
        progressed = False
        still = []
        for e in pending:
            incoming = net.in_edges(e.tail)
            if all(cap[f.id] is not None for f in incoming):
                cap[e.id] = base + sum(cap[f.id] for f in incoming)
                progressed = True
            else:
                still.append(e)
        if not progressed:
            for e in still:
                incoming = net.in_edges(e.tail)
                cap[e.id] = base + sum(
                    cap[f.id] if cap[f.id] is not None else base for f in incoming
                )
            still = []
        pending = still
    edges = [
        e if cap[e.id] == e.capacity else replace(e, capacity=cap[e.id])
        for e in net.edges
    ]
    return Network(
        net.nodes,
        edges,
        net.commodities,
        net.attrs,
        name=net.name,
        recharge_provenance=net.recharge_provenance,
    )


def build_battery_extended_network(
    net: Network, stations: Sequence[ChargingStation]
) -> Network:
    """Attach recharge gadgets and resolve uncapacitated edges.

    For every (station at v, option o) the gadget is the cycle
    v -> "v__<mode>" -> v. The entry edge (id = mode) carries the option's
    duration, capacity and price and a negative battery cost: -delta for
    fixed-amount options, -b_max(i) for full recharges (the battery recursion
    caps at b_max, so overshooting is harmless). Commodities outside the
    option's compatibility set see battery cost +inf, which makes the edge
    unusable for them. The return edge (id = mode + "_ret") has a tiny
    transit time and a never-binding capacity, so the gadget adds the
    option's duration and nothing else.
    """
    nodes = list(net.nodes)
    edges = list(net.edges)
    attrs = dict(net.attrs)
    provenance = dict(net.recharge_provenance)
    seen_modes: set[str] = set()
    for st in stations:
        if st.node not in set(net.nodes):
            raise ValueError(f"station node {st.node!r} not in network")
        for opt in st.options:
            if opt.mode in seen_modes or net.has_edge(opt.mode):
                raise ValueError(f"duplicate charge mode id {opt.mode!r}")
            seen_modes.add(opt.mode)
            aux = f"{st.node}__{opt.mode}"
            if aux in set(nodes):
                raise ValueError(f"aux node id collision: {aux!r}")
            ret_id = f"{opt.mode}_ret"
            if net.has_edge(ret_id):
                raise ValueError(f"edge id collision: {ret_id!r}")
            nodes.append(aux)
            edges.append(
                Edge(opt.mode, st.node, aux, opt.duration, opt.capacity, RECHARGE)
            )
            edges.append(Edge(ret_id, aux, st.node, RETURN_EDGE_TIME, None, RECHARGE_RETURN))
            provenance[opt.mode] = (st.node, opt.mode, "entry")
            provenance[ret_id] = (st.node, opt.mode, "return")
            provenance[aux] = (st.node, opt.mode, "aux")
            for c in net.commodities:
                compatible = opt.compatible is None or c.id in opt.compatible
                if not compatible:
                    # battery_cost = +inf closes the edge for this commodity
                    attrs[(c.id, opt.mode)] = EdgeAttrs(math.inf, opt.price)
                    continue
                gain = c.battery_capacity if opt.full_recharge else opt.delta
                attrs[(c.id, opt.mode)] = EdgeAttrs(-gain, opt.price)
                attrs[(c.id, ret_id)] = EdgeAttrs(0.0, 0.0)
    out = Network(
        nodes,
        edges,
        net.commodities,
        attrs,
        name=net.name,
        recharge_provenance=provenance,
    )
    return resolve_capacities(out)


def _reachable(net: Network, source: str, cid: str) -> set[str]:
    """Nodes reachable from source over edges the commodity may use."""
    seen = {source}
    stack = [source]
    while stack:
        v = stack.pop()
        for e in net.out_edges(v):
            if math.isinf(net.battery_cost(cid, e.id)):
                continue
            if e.head not in seen:
                seen.add(e.head)
                stack.append(e.head)
    return seen


def validate_network(net: Network) -> list[Diagnostic]:
    """Structural checks; returns diagnostics instead of raising.

    Errors make loading/equilibrium computations meaningless (non-positive
    times or capacities, unreachable sinks, batteries outside their window);
    warnings flag suspicious but workable data.
    """
    out: list[Diagnostic] = []

    def err(code: str, subject: str, msg: str) -> None:
        out.append(Diagnostic("error", code, subject, msg))

    def warn(code: str, subject: str, msg: str) -> None:
        out.append(Diagnostic("warning", code, subject, msg))

    for e in net.edges:
        if not (e.transit_time > 0):
            err("nonpositive_transit_time", e.id, f"tau = {e.transit_time}")
        if e.capacity is not None and not (e.capacity > 0):
            err("nonpositive_capacity", e.id, f"nu = {e.capacity}")
        if e.tail == e.head:
            err("self_loop", e.id, "tail equals head")

    for c in net.commodities:
        if c.source not in set(net.nodes):
            err("unknown_source", c.id, c.source)
            continue
        if c.sink not in set(net.nodes):
            err("unknown_sink", c.id, c.sink)
            continue
        if not (c.battery_capacity > 0):
            err("nonpositive_battery_capacity", c.id, f"b_max = {c.battery_capacity}")
        if not (0.0 <= c.initial_battery <= c.battery_capacity):
            err(
                "initial_battery_out_of_range",
                c.id,
                f"b_init = {c.initial_battery}, window [0, {c.battery_capacity}]",
            )
        if c.price_budget < 0:
            err("negative_price_budget", c.id, f"p_max = {c.price_budget}")
        if not c.inflow:
            warn("empty_inflow", c.id, "no inflow pieces")
        for (a, b, r) in c.inflow:
            if not (b > a):
                err("bad_inflow_piece", c.id, f"piece ({a}, {b}) has no width")
            if r < 0:
                err("negative_inflow_rate", c.id, f"rate {r}")
        if c.sink not in _reachable(net, c.source, c.id):
            err("sink_unreachable", c.id, f"{c.sink} unreachable from {c.source}")
        for e in net.edges:
            at = net.edge_attrs(c.id, e.id)
            if at.price < 0:
                err("negative_price", f"{c.id}/{e.id}", f"price {at.price}")
            if at.price > 0 and not e.is_gadget:
                warn(
                    "price_on_physical_edge",
                    f"{c.id}/{e.id}",
                    "prices normally live on recharge edges",
                )
            if math.isinf(at.battery_cost) and not e.is_gadget:
                warn(
                    "infinite_battery_cost",
                    f"{c.id}/{e.id}",
                    "physical edge closed for this commodity",
                )
    return out


def validation_errors(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.severity == "error"]
