"""Energy-feasible walk enumeration.

A walk for commodity i is a sequence of consecutively incident edges from the
commodity's source to its sink. Traversing an edge changes the battery level
by -battery_cost, capped at the battery capacity:

    level_j = min(level_{j-1} - b(i, e_j), b_max),   level_0 = b_init.

The walk is energy-feasible when every post-edge level lies in [0, b_max] and
the summed price respects the budget. Comparisons are exact float arithmetic,
no tolerances.

Enumeration returns the finite catalog of non-dominated feasible walks: a walk
may revisit a node only with a strictly larger battery level than at every
earlier visit (a revisit without energy gain is dominated by the walk that
skips the detour), and no node may be visited more often than the per-node
bound kappa. The DFS applies these rules as prunes; with them the search tree
is finite even though the raw feasible walk set is infinite as soon as a
recharge cycle exists.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

from .network import Network

log = logging.getLogger(__name__)

EDGE_SEQ_SEP = "|"


@dataclass(frozen=True)
class Walk:
    """One source-sink walk of a commodity, with derived constants."""

    commodity: str
    edges: tuple[str, ...]
    battery_profile: tuple[float, ...]
    total_price: float
    free_flow_time: float

    @property
    def min_battery(self) -> float:
        return min(self.battery_profile)

    @property
    def label(self) -> str:
        return EDGE_SEQ_SEP.join(self.edges)

    def __len__(self) -> int:
        return len(self.edges)


@dataclass
class EnumerationLimits:
    """Caps that keep the search bounded on hostile inputs.

    kappa_override pins the visit bound instead of deriving it; hard_cap is
    the visit bound used when no positive-energy cycle exists (or when the
    cycle search exceeds cycle_budget).
    """

    max_length: int = 50
    max_walks: int = 1_000_000
    hard_cap: int = 3
    kappa_override: Optional[int] = None
    cycle_budget: int = 100_000


@dataclass
class WalkCatalog:
    """Per-commodity walk lists in deterministic (lexicographic) order."""

    walks: dict[str, list[Walk]] = field(default_factory=dict)
    kappa: dict[str, int] = field(default_factory=dict)
    kappa_fallback: dict[str, bool] = field(default_factory=dict)
    truncated: dict[str, bool] = field(default_factory=dict)

    def n_walks(self, cid: str) -> int:
        return len(self.walks[cid])

    def infeasible_commodities(self) -> list[str]:
        return [cid for cid, ws in self.walks.items() if not ws]


def walk_price(net: Network, cid: str, edges: Sequence[str]) -> float:
    return sum(net.price(cid, e) for e in edges)


def walk_free_flow_time(net: Network, edges: Sequence[str]) -> float:
    return sum(net.edge(e).transit_time for e in edges)


def is_walk(net: Network, cid: str, edges: Sequence[str]) -> bool:
    """Edge sequence is consecutively incident and runs source -> sink."""
    if not edges:
        return False
    c = net.commodity(cid)
    if net.edge(edges[0]).tail != c.source:
        return False
    for a, b in zip(edges, edges[1:]):
        if net.edge(a).head != net.edge(b).tail:
            return False
    return net.edge(edges[-1]).head == c.sink


def battery_profile(net: Network, cid: str, edges: Sequence[str]) -> tuple[float, ...]:
    """Post-edge battery levels along the walk (one per edge)."""
    c = net.commodity(cid)
    level = c.initial_battery
    out = []
    for e in edges:
        level = min(level - net.battery_cost(cid, e), c.battery_capacity)
        out.append(level)
    return tuple(out)


def is_energy_feasible(
    net: Network, cid: str, edges: Sequence[str]
) -> tuple[bool, str]:
    """Battery window and price budget check; returns (ok, reason)."""
    c = net.commodity(cid)
    level = c.initial_battery
    for j, e in enumerate(edges):
        level = min(level - net.battery_cost(cid, e), c.battery_capacity)
        if math.isnan(level) or level < 0.0:
            return False, f"battery {level} below 0 after edge {e} (position {j})"
    price = walk_price(net, cid, edges)
    if price > c.price_budget:
        return False, f"price {price} exceeds budget {c.price_budget}"
    return True, "feasible"


def _usable_edges(net: Network, cid: str) -> list:
    return [e for e in net.edges if not math.isinf(net.battery_cost(cid, e.id))]


def _simple_edge_cycles(
    net: Network, cid: str, budget: int
) -> Iterator[Optional[list[str]]]:
    """Node-simple cycles as edge id lists, each exactly once.

    Parallel edges yield distinct cycles. Each cycle is anchored at its
    lowest-index node and explored only through higher-index nodes, so no
    cycle is reported twice. Yields None once if the budget runs out.
    """
    order = {v: k for k, v in enumerate(net.nodes)}
    out_by_node: dict[str, list] = {v: [] for v in net.nodes}
    for e in _usable_edges(net, cid):
        out_by_node[e.tail].append(e)
    for adj in out_by_node.values():
        adj.sort(key=lambda e: e.id)
    count = 0
    for start in net.nodes:
        s = order[start]
        path_edges: list[str] = []
        on_path = {start}
        stack = [(start, iter(out_by_node[start]))]
        while stack:
            v, it = stack[-1]
            advanced = False
            for e in it:
                w = e.head
                if w == start:
                    count += 1
                    if count > budget:
                        yield None
                        return
                    yield path_edges + [e.id]
                elif order[w] > s and w not in on_path:
                    path_edges.append(e.id)
                    on_path.add(w)
                    stack.append((w, iter(out_by_node[w])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if path_edges:
                    on_path.discard(v)
                    path_edges.pop()


def visit_bound_kappa(
    net: Network, cid: str, limits: EnumerationLimits | None = None
) -> tuple[int, bool]:
    """Per-node visit bound for the commodity.

    kappa = ceil(b_max / alpha) with alpha the smallest positive battery-cost
    sum over simple cycles of the extended graph: every extra visit to a node
    closes a cycle, and each positive cycle costs at least alpha energy, so a
    walk cannot contain more than b_max / alpha of them. Without a positive
    cycle the bound degenerates and a configurable hard cap applies (also
    when the cycle enumeration exceeds its budget). Returns (kappa,
    fallback_used).
    """
    lim = limits or EnumerationLimits()
    if lim.kappa_override is not None:
        return lim.kappa_override, False
    c = net.commodity(cid)
    alpha = math.inf
    exhausted = False
    for cyc in _simple_edge_cycles(net, cid, lim.cycle_budget):
        if cyc is None:
            exhausted = True
            break
        s = sum(net.battery_cost(cid, e) for e in cyc)
        if s > 0.0 and s < alpha:
            alpha = s
    if exhausted:
        log.warning(
            "commodity %s: cycle budget %d exhausted, using hard visit cap %d",
            cid,
            lim.cycle_budget,
            lim.hard_cap,
        )
        return lim.hard_cap, True
    if math.isinf(alpha):
        log.warning(
            "commodity %s: no positive-energy cycle, using hard visit cap %d",
            cid,
            lim.hard_cap,
        )
        return lim.hard_cap, True
    return max(1, math.ceil(c.battery_capacity / alpha)), False


def enumerate_feasible_walks(
    net: Network,
    cid: str,
    limits: EnumerationLimits | None = None,
    kappa: int | None = None,
) -> tuple[list[Walk], bool]:
    """DFS enumeration of the commodity's walk catalog.

    Returns (walks sorted lexicographically by edge sequence, truncated
    flag). An empty list means the commodity has no feasible walk.
    kappa overrides the visit bound (callers that already derived it).
    """
    lim = limits or EnumerationLimits()
    c = net.commodity(cid)
    if kappa is None:
        kappa, _ = visit_bound_kappa(net, cid, lim)
    out_by_node: dict[str, list] = {v: [] for v in net.nodes}
    for e in _usable_edges(net, cid):
        out_by_node[e.tail].append(e)
    for adj in out_by_node.values():
        adj.sort(key=lambda e: e.id)

    found: list[tuple[tuple[str, ...], tuple[float, ...], float, float]] = []
    truncated = False
    path: list[str] = []
    profile: list[float] = []
    visits: dict[str, int] = {c.source: 1}
    levels_at: dict[str, list[float]] = {c.source: [c.initial_battery]}

    def extend(node: str, level: float, price: float, time: float) -> bool:
        nonlocal truncated
        if node == c.sink and path:
            found.append((tuple(path), tuple(profile), price, time))
            if len(found) >= lim.max_walks:
                truncated = True
                return False
        if len(path) >= lim.max_length:
            return True
        for e in out_by_node[node]:
            nl = min(level - net.battery_cost(cid, e.id), c.battery_capacity)
            if math.isnan(nl) or nl < 0.0:
                continue
            np_ = price + net.price(cid, e.id)
            if np_ > c.price_budget:
                continue
            w = e.head
            if visits.get(w, 0) + 1 > kappa:
                continue
            prev = levels_at.get(w)
            if prev and any(nl <= lv for lv in prev):
                continue  # dominated: revisit without strict battery gain
            path.append(e.id)
            profile.append(nl)
            visits[w] = visits.get(w, 0) + 1
            levels_at.setdefault(w, []).append(nl)
            ok = extend(w, nl, np_, time + net.edge(e.id).transit_time)
            levels_at[w].pop()
            visits[w] -= 1
            profile.pop()
            path.pop()
            if not ok:
                return False
        return True

    extend(c.source, c.initial_battery, 0.0, 0.0)
    found.sort(key=lambda rec: rec[0])
    walks = [
        Walk(cid, edges, prof, price, time) for (edges, prof, price, time) in found
    ]
    return walks, truncated


def build_catalog(
    net: Network, limits: EnumerationLimits | None = None
) -> WalkCatalog:
    cat = WalkCatalog()
    for c in net.commodities:
        kappa, fb = visit_bound_kappa(net, c.id, limits)
        walks, truncated = enumerate_feasible_walks(net, c.id, limits, kappa=kappa)
        cat.walks[c.id] = walks
        cat.kappa[c.id] = kappa
        cat.kappa_fallback[c.id] = fb
        cat.truncated[c.id] = truncated
    return cat


def write_catalog(catalog: WalkCatalog, outdir: str | Path) -> list[Path]:
    """CSV per commodity plus a JSON summary sidecar; returns written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    summary: dict[str, dict] = {}
    for cid in sorted(catalog.walks):
        path = outdir / f"catalog_{cid}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["walk_index", "edge_sequence", "free_flow_time", "total_price", "min_battery"]
            )
            for k, walk in enumerate(catalog.walks[cid]):
                w.writerow(
                    [k, walk.label, repr(walk.free_flow_time), repr(walk.total_price), repr(walk.min_battery)]
                )
        written.append(path)
        summary[cid] = {
            "count": catalog.n_walks(cid),
            "kappa": catalog.kappa[cid],
            "kappa_fallback": catalog.kappa_fallback[cid],
            "truncated": catalog.truncated[cid],
            "no_feasible_walk": catalog.n_walks(cid) == 0,
        }
    spath = outdir / "catalog_summary.json"
    with open(spath, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(spath)
    return written
