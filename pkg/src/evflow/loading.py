"""Exact network loading for piecewise-constant walk inflows.

Every edge runs a Vickrey point queue: the queue volume q_e is piecewise
linear, cumulative in/outflows are piecewise linear, rates are piecewise
constant. A particle entering edge e at time theta leaves it at

    T_e(theta) = theta + tau_e + q_e(theta) / nu_e,

and the aggregate outflow measured at exit times obeys the queue-at-capacity
rule: nu_e while the queue is positive, min(inflow rate, nu_e) while it is
empty. Because T_e is continuous and non-decreasing, each maximal interval of
constant inflow regime [t1, t2) maps onto the exit window [T_e(t1), T_e(t2))
and carries its mass there; walks entering together share the window's
outflow in proportion to their entry rates (FIFO). The engine exploits this
directly: whenever an edge's regime changes at entry time t it schedules the
new per-walk outflow rates at T_e(t). Continuity of T_e makes these windows
tile the exit axis exactly, with no inversion step and no growth of the event
count beyond regime changes.

The run is event driven. Events are per-walk rate changes on edges and
predicted queue-empty times (invalidated by a version counter whenever the
edge's state changes first). Events closer than a merge tolerance are handled
as simultaneous. The loop ends when all queues have drained and every
injected particle has reached its sink, which happens in finitely many events
since transit times are positive; a configurable event cap guards against
runaway inputs.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .flows import WalkFlow, membership_violation, MEMBERSHIP_RTOL
from .network import Diagnostic, Network
from .walks import WalkCatalog


@dataclass
class LoadingOptions:
    merge_tol: float = 1e-12
    event_cap: int = 10_000_000
    check_membership: bool = True


class LoadingError(RuntimeError):
    pass


def _cumulative(events: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray]:
    """Integrate a sorted (time, new rate) stream into breakpoint samples."""
    if not events:
        return np.zeros(0), np.zeros(0)
    ts = [events[0][0]]
    vs = [0.0]
    rate = events[0][1]
    for (t, r) in events[1:]:
        ts.append(t)
        vs.append(vs[-1] + rate * (t - ts[-2]))
        rate = r
    return np.asarray(ts), np.asarray(vs)


def _interp(ts: np.ndarray, vs: np.ndarray, x) -> np.ndarray | float:
    if len(ts) == 0:
        return np.zeros_like(x, dtype=float) if np.ndim(x) else 0.0
    return np.interp(x, ts, vs)


class _EdgeState:
    __slots__ = (
        "eid",
        "tau",
        "nu",
        "t",
        "q",
        "rates",
        "r",
        "out_rates",
        "qbp",
        "in_events",
        "out_events",
        "qe_version",
    )

    def __init__(self, eid: str, tau: float, nu: float) -> None:
        self.eid = eid
        self.tau = tau
        self.nu = nu
        self.t = 0.0
        self.q = 0.0
        self.rates: dict[tuple[str, int, int], float] = {}
        self.r = 0.0
        self.out_rates: dict[tuple[str, int, int], float] = {}
        self.qbp: list[tuple[float, float]] = []
        self.in_events: list[tuple[float, float]] = []
        self.out_events: list[tuple[float, float]] = []
        self.qe_version = 0

    def exit_time(self) -> float:
        return self.t + self.tau + self.q / self.nu

    def advance(self, t: float) -> None:
        dt = t - self.t
        if dt <= 0.0:
            return
        if not self.qbp:
            self.qbp.append((self.t, self.q))
        slope = self.r - self.nu if self.q > 0.0 else max(self.r - self.nu, 0.0)
        q = self.q + slope * dt
        self.q = q if q > 0.0 else 0.0
        self.t = t
        self.qbp.append((t, self.q))


@dataclass
class EdgeRecord:
    """Frozen per-edge trajectories: queue (entry time axis), cumulative
    inflow (entry time axis), cumulative outflow (exit time axis)."""

    tau: float
    nu: float
    queue_t: np.ndarray
    queue_v: np.ndarray
    cum_in_t: np.ndarray
    cum_in_v: np.ndarray
    cum_out_t: np.ndarray
    cum_out_v: np.ndarray
    out_rates: list[tuple[float, float]]

    def queue_at(self, theta) -> np.ndarray | float:
        return _interp(self.queue_t, self.queue_v, theta)

    def cum_in(self, theta) -> np.ndarray | float:
        return _interp(self.cum_in_t, self.cum_in_v, theta)

    def cum_out(self, theta) -> np.ndarray | float:
        return _interp(self.cum_out_t, self.cum_out_v, theta)


@dataclass
class LoadingResult:
    """Exact loading of a walk flow.

    streams[(cid, widx, j)] is the (time, rate) outflow stream of position j
    of the walk (the inflow stream of position j+1; the last one is the sink
    arrival stream). horizon is the time the network empties.
    """

    net: Network
    catalog: WalkCatalog
    flow: WalkFlow
    edges: dict[str, EdgeRecord]
    streams: dict[tuple[str, int, int], list[tuple[float, float]]]
    horizon: float
    n_events: int
    _cum_cache: dict[tuple[str, int, int], tuple[np.ndarray, np.ndarray]] = field(
        default_factory=dict, repr=False
    )

    # -- elementary queries ------------------------------------------------

    def queue_at(self, eid: str, theta) -> np.ndarray | float:
        return self.edges[eid].queue_at(theta)

    def exit_time(self, eid: str, theta) -> np.ndarray | float:
        rec = self.edges[eid]
        return theta + rec.tau + rec.queue_at(theta) / rec.nu

    def walk_arrival(self, cid: str, widx: int, theta) -> np.ndarray | float:
        """Arrival time at the sink when entering the walk at theta."""
        t = theta
        for eid in self.catalog.walks[cid][widx].edges:
            t = self.exit_time(eid, t)
        return t

    def walk_travel_time(self, cid: str, widx: int, theta) -> np.ndarray | float:
        return self.walk_arrival(cid, widx, theta) - theta

    def stream_cumulative(
        self, cid: str, widx: int, j: int
    ) -> tuple[np.ndarray, np.ndarray]:
        key = (cid, widx, j)
        if key not in self._cum_cache:
            self._cum_cache[key] = _cumulative(self.streams.get(key, []))
        return self._cum_cache[key]

    def position_inflow_cumulative(
        self, cid: str, widx: int, j: int
    ) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative inflow into position j (j=0: the prescribed walk flow)."""
        if j == 0:
            return _cumulative(self.flow.rate_events(cid, widx))
        return self.stream_cumulative(cid, widx, j - 1)

    def sink_arrival_cumulative(self, cid: str, widx: int) -> tuple[np.ndarray, np.ndarray]:
        k = len(self.catalog.walks[cid][widx].edges)
        return self.stream_cumulative(cid, widx, k - 1)

    def total_delivered(self) -> float:
        total = 0.0
        for cid, ws in self.catalog.walks.items():
            for widx in range(len(ws)):
                _, vs = self.sink_arrival_cumulative(cid, widx)
                total += float(vs[-1]) if len(vs) else 0.0
        return total


def network_loading(
    net: Network,
    catalog: WalkCatalog,
    flow: WalkFlow,
    options: LoadingOptions | None = None,
) -> LoadingResult:
    """Run the event-driven loading of a walk flow.

    Raises LoadingError when the flow violates row-sum membership, references
    unknown edges, or the event cap is hit.
    """
    opt = options or LoadingOptions()
    if opt.check_membership:
        viol = membership_violation(net, flow)
        if not (viol <= MEMBERSHIP_RTOL):
            raise LoadingError(
                f"walk flow violates demand membership (relative error {viol:.3e})"
            )
    for cid, ws in catalog.walks.items():
        if cid not in flow.rates:
            raise LoadingError(f"flow missing commodity {cid!r}")
        if flow.rates[cid].shape[0] != len(ws):
            raise LoadingError(
                f"flow for {cid!r} has {flow.rates[cid].shape[0]} walk rows, "
                f"catalog has {len(ws)}"
            )

    states: dict[str, _EdgeState] = {}
    for e in net.edges:
        if e.capacity is None:
            raise LoadingError(f"edge {e.id} has unresolved capacity")
        states[e.id] = _EdgeState(e.id, e.transit_time, e.capacity)

    # walk positions: pos_edges[(cid, widx)][j] = edge id
    pos_edges: dict[tuple[str, int], tuple[str, ...]] = {}
    for cid, ws in catalog.walks.items():
        for widx, w in enumerate(ws):
            for eid in w.edges:
                if eid not in states:
                    raise LoadingError(f"walk references unknown edge {eid!r}")
            pos_edges[(cid, widx)] = w.edges

    streams: dict[tuple[str, int, int], list[tuple[float, float]]] = {}

    counter = itertools.count()
    heap: list[tuple[float, int, int, tuple]] = []
    RATE, QEMPTY = 0, 1

    def push_rate(t: float, poskey: tuple[str, int, int], rate: float) -> None:
        heapq.heappush(heap, (t, next(counter), RATE, (poskey, rate)))

    def push_qempty(t: float, eid: str, version: int) -> None:
        heapq.heappush(heap, (t, next(counter), QEMPTY, (eid, version)))

    for (cid, widx), edges in pos_edges.items():
        for (t, r) in flow.rate_events(cid, widx):
            push_rate(t, (cid, widx, 0), r)

    horizon = 0.0

    last_emit_y: dict[str, float] = {}

    def emit(st: _EdgeState) -> None:
        """Schedule the new outflow regime at the exit time of now."""
        nonlocal horizon
        y = st.exit_time()
        # exit times are non-decreasing in exact arithmetic; clamp float dust
        prev_y = last_emit_y.get(st.eid)
        if prev_y is not None and y < prev_y:
            y = prev_y
        last_emit_y[st.eid] = y
        if st.q > 0.0:
            rho = st.nu
        else:
            rho = st.r if st.r < st.nu else st.nu
        new_out: dict[tuple[str, int, int], float] = {}
        if st.r > 0.0:
            scale = rho / st.r
            for poskey, r in st.rates.items():
                if r != 0.0:
                    new_out[poskey] = r * scale
        changed = set(new_out) | set(st.out_rates)
        agg_changed = False
        for poskey in changed:
            nr = new_out.get(poskey, 0.0)
            if st.out_rates.get(poskey, 0.0) == nr:
                continue
            agg_changed = True
            cid, widx, j = poskey
            streams.setdefault(poskey, []).append((y, nr))
            edges = pos_edges[(cid, widx)]
            if j + 1 < len(edges):
                push_rate(y, (cid, widx, j + 1), nr)
        if agg_changed:
            st.out_events.append((y, sum(new_out.values())))
            st.out_rates = new_out
            if y > horizon:
                horizon = y

    n_events = 0
    tol = opt.merge_tol
    while heap:
        t0 = heap[0][0]
        batch_rates: dict[tuple[str, int, int], float] = {}
        touched: set[str] = set()
        emptied: set[str] = set()
        while heap and heap[0][0] <= t0 + tol:
            _, _, kind, payload = heapq.heappop(heap)
            n_events += 1
            if n_events > opt.event_cap:
                raise LoadingError(f"event cap {opt.event_cap} exceeded")
            if kind == RATE:
                poskey, rate = payload
                batch_rates[poskey] = rate  # last write wins within the batch
                touched.add(pos_edges[poskey[:2]][poskey[2]])
            else:
                eid, version = payload
                if states[eid].qe_version == version:
                    touched.add(eid)
                    emptied.add(eid)
        for eid in sorted(touched):
            st = states[eid]
            st.advance(t0)
            if eid in emptied:
                # the prediction is exact up to rounding; snap the residue
                st.q = 0.0
                if st.qbp:
                    st.qbp[-1] = (st.qbp[-1][0], 0.0)
            st.qe_version += 1
            r_changed = False
            for poskey, rate in batch_rates.items():
                if pos_edges[poskey[:2]][poskey[2]] != eid:
                    continue
                if rate != 0.0:
                    st.rates[poskey] = rate
                else:
                    st.rates.pop(poskey, None)
                r_changed = True
            if r_changed:
                st.r = sum(st.rates.values())
                st.in_events.append((t0, st.r))
            emit(st)
            # deficits below float dust would predict absurdly distant drain
            # times; such queues sit still until the next inflow change
            deficit = st.nu - st.r
            if st.q > 0.0 and deficit > 1e-12 * max(1.0, st.nu):
                push_qempty(t0 + st.q / deficit, eid, st.qe_version)

    records: dict[str, EdgeRecord] = {}
    for e in net.edges:
        st = states[e.id]
        qt, qv = (
            (np.array([p[0] for p in st.qbp]), np.array([p[1] for p in st.qbp]))
            if st.qbp
            else (np.zeros(0), np.zeros(0))
        )
        it, iv = _cumulative(st.in_events)
        ot, ov = _cumulative(st.out_events)
        records[e.id] = EdgeRecord(
            e.transit_time, e.capacity, qt, qv, it, iv, ot, ov, list(st.out_events)
        )

    return LoadingResult(net, catalog, flow, records, streams, horizon, n_events)


# -- invariant verification -------------------------------------------------


def verify_loading(
    result: LoadingResult,
    conservation_tol: float = 1e-9,
    capacity_slack: float = 1e-12,
    max_check_times: int = 50_000,
) -> list[Diagnostic]:
    """Check the loading against the flow-over-time axioms.

    Verifies queue non-negativity, outflow-rate capacity compliance, FIFO
    (non-decreasing exit times), aggregation consistency between per-walk
    streams and per-edge aggregates, mass conservation at event times, and
    full delivery of the injected mass. Returns diagnostics, empty when all
    checks pass.
    """
    net, flow = result.net, result.flow
    out: list[Diagnostic] = []

    def err(code: str, subject: str, msg: str) -> None:
        out.append(Diagnostic("error", code, subject, msg))

    for eid, rec in result.edges.items():
        if len(rec.queue_v) and float(rec.queue_v.min()) < -1e-12:
            err("negative_queue", eid, f"min queue {rec.queue_v.min():.3e}")
        for (_, rate) in rec.out_rates:
            if rate > rec.nu * (1.0 + capacity_slack) + capacity_slack:
                err("capacity_violated", eid, f"outflow rate {rate} > nu {rec.nu}")
        if len(rec.queue_t):
            exits = rec.queue_t + rec.tau + rec.queue_v / rec.nu
            if np.any(np.diff(exits) < -1e-12):
                err("fifo_violated", eid, "exit times decrease at a breakpoint")

    # per-edge aggregation consistency: summed per-walk streams == aggregate
    per_edge_in: dict[str, list[tuple[float, float]]] = {eid: [] for eid in result.edges}
    per_edge_out: dict[str, list[tuple[float, float]]] = {eid: [] for eid in result.edges}
    for (cid, widx), _ in _iter_walks(result):
        edges = result.catalog.walks[cid][widx].edges
        for j, eid in enumerate(edges):
            ts, vs = result.position_inflow_cumulative(cid, widx, j)
            per_edge_in[eid].append((ts, vs))
            ts, vs = result.stream_cumulative(cid, widx, j)
            per_edge_out[eid].append((ts, vs))
    for eid, rec in result.edges.items():
        for (pieces, ct, cv, label) in (
            (per_edge_in[eid], rec.cum_in_t, rec.cum_in_v, "inflow"),
            (per_edge_out[eid], rec.cum_out_t, rec.cum_out_v, "outflow"),
        ):
            if not len(ct):
                if any(len(vs) and vs[-1] > conservation_tol for _, vs in pieces):
                    err("aggregation_mismatch", eid, f"walk {label} without aggregate")
                continue
            total = np.zeros_like(ct)
            for ts, vs in pieces:
                total += _interp(ts, vs, ct)
            gap = float(np.max(np.abs(total - cv))) if len(ct) else 0.0
            if gap > conservation_tol * max(1.0, float(np.abs(cv).max())):
                err(
                    "aggregation_mismatch",
                    eid,
                    f"per-walk {label} sum deviates from aggregate by {gap:.3e}",
                )

    # conservation at event times: storage == injected - delivered
    times: set[float] = {0.0, result.horizon}
    for rec in result.edges.values():
        times.update(rec.cum_in_t.tolist())
        times.update(rec.cum_out_t.tolist())
    check_times = np.array(sorted(times))
    if len(check_times) > max_check_times:
        idx = np.linspace(0, len(check_times) - 1, max_check_times).astype(int)
        check_times = check_times[idx]
    storage = np.zeros_like(check_times)
    for rec in result.edges.values():
        storage += _interp(rec.cum_in_t, rec.cum_in_v, check_times)
        storage -= _interp(rec.cum_out_t, rec.cum_out_v, check_times)
    injected = np.zeros_like(check_times)
    for (cid, widx), _ in _iter_walks(result):
        ts, vs = result.position_inflow_cumulative(cid, widx, 0)
        injected += _interp(ts, vs, check_times)
    delivered = np.zeros_like(check_times)
    for c in net.commodities:
        for eid in (e.id for e in net.in_edges(c.sink)):
            delivered += _commodity_edge_cum(result, c.id, eid, "out", check_times)
        for eid in (e.id for e in net.out_edges(c.sink)):
            delivered -= _commodity_edge_cum(result, c.id, eid, "in", check_times)
    gap = np.max(np.abs(storage - (injected - delivered)))
    scale = max(1.0, float(np.abs(injected).max()))
    if gap > conservation_tol * scale:
        err("conservation_violated", "network", f"max gap {gap:.3e} at event times")

    total_in = result.flow.total_mass()
    total_out = result.total_delivered()
    if abs(total_in - total_out) > conservation_tol * max(1.0, total_in):
        err(
            "mass_not_delivered",
            "network",
            f"injected {total_in!r}, delivered {total_out!r}",
        )
    return out


def _iter_walks(result: LoadingResult):
    for cid, ws in result.catalog.walks.items():
        for widx in range(len(ws)):
            yield (cid, widx), ws[widx]


def _commodity_edge_cum(
    result: LoadingResult, cid: str, eid: str, side: str, at: np.ndarray
) -> np.ndarray:
    """Cumulative (in|out)flow of one commodity on one edge at given times."""
    total = np.zeros_like(at)
    for widx, w in enumerate(result.catalog.walks[cid]):
        for j, e in enumerate(w.edges):
            if e != eid:
                continue
            if side == "in":
                ts, vs = result.position_inflow_cumulative(cid, widx, j)
            else:
                ts, vs = result.stream_cumulative(cid, widx, j)
            total += _interp(ts, vs, at)
    return total
