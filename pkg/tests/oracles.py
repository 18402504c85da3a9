"""Independent reference implementations for cross-checking.

Everything here is deliberately simple and slow: a packet-based forward-Euler
traffic simulator, exhaustive walk enumeration by filtering, a bisection
solver for the flow-update row problem, and plain BFS. None of it shares code
with the package beyond the data types, so agreement between the two is
meaningful.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from evflow.network import Network
from evflow.flows import WalkFlow
from evflow.walks import WalkCatalog


def bfs_reachable(net: Network, cid: str, source: str) -> set[str]:
    seen = {source}
    frontier = deque([source])
    while frontier:
        v = frontier.popleft()
        for e in net.out_edges(v):
            if math.isinf(net.battery_cost(cid, e.id)):
                continue
            if e.head not in seen:
                seen.add(e.head)
                frontier.append(e.head)
    return seen


# -- exhaustive walk enumeration ---------------------------------------------


def _catalog_member(net: Network, cid: str, seq: tuple[str, ...], kappa: int) -> bool:
    """Full membership predicate, applied as a filter (no search pruning)."""
    c = net.commodity(cid)
    level = c.initial_battery
    price = 0.0
    visits: dict[str, int] = {c.source: 1}
    levels: dict[str, list[float]] = {c.source: [c.initial_battery]}
    for eid in seq:
        e = net.edge(eid)
        level = min(level - net.battery_cost(cid, eid), c.battery_capacity)
        if math.isnan(level) or level < 0.0:
            return False
        price += net.price(cid, eid)
        if price > c.price_budget:
            return False
        visits[e.head] = visits.get(e.head, 0) + 1
        if visits[e.head] > kappa:
            return False
        prev = levels.get(e.head, [])
        if any(level <= lv for lv in prev):
            return False
        levels.setdefault(e.head, []).append(level)
    return True


def brute_force_walks(
    net: Network, cid: str, kappa: int, max_length: int
) -> list[tuple[str, ...]]:
    """All catalog members up to max_length, by breadth-first extension of
    every incident edge sequence and filtering each candidate from scratch."""
    c = net.commodity(cid)
    results = []
    frontier: deque[tuple[str, ...]] = deque()
    for e in net.edges:
        if e.tail == c.source:
            frontier.append((e.id,))
    while frontier:
        seq = frontier.popleft()
        if len(seq) > max_length:
            continue
        if not _catalog_member(net, cid, seq, kappa):
            # every prefix of a member is a member, so dead prefixes cannot
            # revive; still correct, just prunes the blowup a little
            continue
        if net.edge(seq[-1]).head == c.sink:
            results.append(seq)
        if len(seq) < max_length:
            head = net.edge(seq[-1]).head
            for e in net.edges:
                if e.tail == head:
                    frontier.append(seq + (e.id,))
    return sorted(results)


# -- forward-Euler packet simulator ------------------------------------------


class EulerSim:
    """Discrete-step Vickrey simulation.

    Each edge is a FIFO queue followed by a fixed-delay pipe of
    round(tau/dt) steps. Per step: deliver pipe arrivals into downstream
    queues (or the sink), inject source inflow, then drain each queue by at
    most nu * dt, splitting packets as needed. Cumulative entries/exits are
    recorded at step boundaries. First-order accurate in dt.
    """

    def __init__(
        self,
        net: Network,
        catalog: WalkCatalog,
        flow: WalkFlow,
        dt: float,
        t_end: float,
    ) -> None:
        self.net = net
        self.catalog = catalog
        self.flow = flow
        self.dt = dt
        self.n_steps = int(round(t_end / dt))
        self.times = np.arange(self.n_steps + 1) * dt

    def run(self) -> "EulerSim":
        net, flow, dt = self.net, self.flow, self.dt
        K = self.n_steps
        edge_ids = [e.id for e in net.edges]
        nu = {e.id: e.capacity for e in net.edges}
        delay = {e.id: max(1, int(round(e.transit_time / dt))) for e in net.edges}
        queues: dict[str, deque] = {eid: deque() for eid in edge_ids}
        max_delay = max(delay.values(), default=1)
        pipes: dict[str, list[list]] = {
            eid: [[] for _ in range(K + max_delay + 2)] for eid in edge_ids
        }
        cum_in = {eid: np.zeros(K + 1) for eid in edge_ids}
        cum_out = {eid: np.zeros(K + 1) for eid in edge_ids}
        walk_edges = {
            (cid, widx): ws[widx].edges
            for cid, ws in self.catalog.walks.items()
            for widx in range(len(ws))
        }
        sink_cum = {key: np.zeros(K + 1) for key in walk_edges}
        grid = flow.grid
        # per-step inflow interval index: left endpoint rule
        interval_of = np.clip(
            np.searchsorted(grid, self.times[:-1], side="right") - 1,
            0,
            len(grid) - 2,
        )
        in_rate = {
            key: np.asarray(flow.rates[key[0]][key[1]]) for key in walk_edges
        }
        beyond = self.times[:-1] >= grid[-1]

        for k in range(K):
            add_in = {eid: 0.0 for eid in edge_ids}
            add_out = {eid: 0.0 for eid in edge_ids}
            # pipe deliveries
            for eid in edge_ids:
                for poskey, vol in pipes[eid][k]:
                    add_out[eid] += vol
                    cid, widx, j = poskey
                    edges = walk_edges[(cid, widx)]
                    if j + 1 < len(edges):
                        nxt = edges[j + 1]
                        queues[nxt].append([(cid, widx, j + 1), vol])
                        add_in[nxt] += vol
                    else:
                        sink_cum[(cid, widx)][k + 1] += vol
                pipes[eid][k] = []
            # source injections
            for key, edges in walk_edges.items():
                if beyond[k]:
                    continue
                rate = in_rate[key][interval_of[k]]
                if rate > 0.0:
                    vol = rate * dt
                    first = edges[0]
                    queues[first].append([(key[0], key[1], 0), vol])
                    add_in[first] += vol
            # drains
            for eid in edge_ids:
                cap = nu[eid] * dt
                q = queues[eid]
                while cap > 0.0 and q:
                    poskey, vol = q[0]
                    take = vol if vol <= cap else cap
                    if take == vol:
                        q.popleft()
                    else:
                        q[0][1] = vol - take
                    cap -= take
                    pipes[eid][k + delay[eid]].append((poskey, take))
            for eid in edge_ids:
                cum_in[eid][k + 1] = cum_in[eid][k] + add_in[eid]
                cum_out[eid][k + 1] = cum_out[eid][k] + add_out[eid]
        for key in sink_cum:
            np.cumsum(sink_cum[key], out=sink_cum[key])
        self.cum_in = cum_in
        self.cum_out = cum_out
        self.sink_cum = sink_cum
        return self

    def total_delivered(self) -> float:
        return float(sum(v[-1] for v in self.sink_cum.values()))


def simulate_euler(
    net: Network, catalog: WalkCatalog, flow: WalkFlow, dt: float, t_end: float
) -> EulerSim:
    return EulerSim(net, catalog, flow, dt, t_end).run()


# -- bisection solver for the update row -------------------------------------


def solve_row_bisection(
    h: np.ndarray, c: np.ndarray, alpha: float, u: float, iters: int = 200
) -> tuple[np.ndarray, float]:
    """Solve sum_W max(h_W - alpha c_W + v, 0) = u for v by bisection."""
    d = alpha * np.asarray(c, dtype=float) - np.asarray(h, dtype=float)
    if u == 0.0:
        return np.zeros_like(d), float(d.min())
    lo = float(d.min())
    hi = lo + u  # sum at hi is at least (hi - d.min()) = u
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        s = float(np.maximum(mid - d, 0.0).sum())
        if s < u:
            lo = mid
        else:
            hi = mid
    v = 0.5 * (lo + hi)
    return np.maximum(v - d, 0.0), v
