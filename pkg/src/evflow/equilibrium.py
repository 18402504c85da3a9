"""Fixed-point iteration for approximate dynamic equilibria.

Each iteration loads the current walk flow, evaluates aggregated walk costs
at interval midpoints, and applies the projection-style update

    h'_W = [h_W - alpha * c_W + v]_+        with  sum_W h'_W = u,

where v solves the scalar water-filling equation per (commodity, interval).
The map v -> sum_W [h_W - alpha*c_W + v]_+ is piecewise linear and
non-decreasing, so v is found exactly by a sort-and-scan over the
breakpoints alpha*c_W - h_W; no iterative root finder is involved. The step
size is rescaled from the relative change between consecutive iterates.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .flows import WalkFlow, demand_targets, uniform_grid, zero_flow
from .loading import LoadingOptions, LoadingResult, network_loading
from .network import Network
from .walks import WalkCatalog

INITIALIZATIONS = ("shortest", "uniform", "file")
TERMINATIONS = ("abs", "rel")
NORMS = ("l2", "l1")


@dataclass
class FixedPointConfig:
    """Knobs of the fixed-point loop.

    epsilon is compared against the absolute change between consecutive
    iterates by default; termination="rel" divides by the norm of the
    previous iterate first. Norms are interval-length weighted, L1 by
    default with an L2 option.
    """

    epsilon: float = 0.01
    alpha0: float = 0.5
    intervals: int = 100
    max_iters: int = 1000
    time_limit_s: float = math.inf
    initialization: str = "shortest"
    termination: str = "abs"
    norm: str = "l1"
    threads: int = 1

    def validate(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if self.intervals < 1:
            raise ValueError("need at least one interval")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.initialization not in INITIALIZATIONS:
            raise ValueError(f"unknown initialization {self.initialization!r}")
        if self.termination not in TERMINATIONS:
            raise ValueError(f"unknown termination mode {self.termination!r}")
        if self.norm not in NORMS:
            raise ValueError(f"unknown norm {self.norm!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class IterationStats:
    k: int
    delta_h_abs: float
    delta_h_rel: float
    qopi: float
    qopi_abs: float
    alpha: float
    wall_time: float
    loading_s: float = 0.0
    update_s: float = 0.0


@dataclass
class EquilibriumResult:
    flow: WalkFlow
    grid: np.ndarray
    stats: list[IterationStats] = field(default_factory=list)
    termination: str = "max_iters"
    loading: LoadingResult | None = None
    costs: dict[str, np.ndarray] | None = None

    @property
    def converged(self) -> bool:
        return self.termination == "converged"

    @property
    def iterations(self) -> int:
        return len(self.stats)


def flow_norm(
    values: Mapping[str, np.ndarray], widths: np.ndarray, norm: str = "l2"
) -> float:
    """Interval-length weighted norm over all (commodity, walk) rows."""
    if norm == "l2":
        total = sum(
            float((widths * (mat * mat)).sum()) for mat in values.values()
        )
        return math.sqrt(total)
    if norm == "l1":
        return sum(float((widths * np.abs(mat)).sum()) for mat in values.values())
    raise ValueError(f"unknown norm {norm!r}")


def midpoint_costs(
    result: LoadingResult,
    catalog: WalkCatalog,
    grid: np.ndarray,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """Aggregated walk costs at interval midpoints, one (W x N) matrix per
    commodity. Cost combines the walk travel time at the midpoint with the
    walk's total recharge price through the commodity's aggregation."""
    mids = 0.5 * (np.asarray(grid)[:-1] + np.asarray(grid)[1:])

    def one(cid: str) -> tuple[str, np.ndarray]:
        walks = catalog.walks[cid]
        agg = result.net.commodity(cid).aggregation
        mat = np.empty((len(walks), len(mids)))
        for w, walk in enumerate(walks):
            mu = result.walk_arrival(cid, w, mids) - mids
            mat[w] = agg.cost(mu, walk.total_price)
        return cid, mat

    cids = sorted(catalog.walks)
    if threads > 1 and len(cids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(one, cids))
    return dict(one(cid) for cid in cids)


def solve_fp_update(
    h_row: Sequence[float],
    cost_row: Sequence[float],
    u_target: float,
    alpha: float,
) -> tuple[float, np.ndarray]:
    """Solve sum_W [h_W - alpha*c_W + v]_+ = u_target for one row.

    Returns (v, new_row). For u_target = 0 the row is zeroed and v is the
    smallest breakpoint by convention.
    """
    if u_target < 0:
        raise ValueError("u_target must be non-negative")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    h = np.asarray(h_row, dtype=float)
    c = np.asarray(cost_row, dtype=float)
    if h.shape != c.shape or h.ndim != 1 or h.size == 0:
        raise ValueError("h_row and cost_row must be equal-length vectors")
    v, row = _fp_update_columns(
        h[:, None], alpha * c[:, None], np.array([u_target])
    )
    return float(v[0]), row[:, 0]


def _fp_update_columns(
    H: np.ndarray, D_shift: np.ndarray, u: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized water-filling over columns.

    H, D_shift: (W x N) with D_shift = alpha * costs; u: (N,). Solves per
    column sum_W [H - D_shift + v]_+ = u by sorting the breakpoints
    d = D_shift - H and scanning prefix means; exact up to float rounding,
    afterwards columns are rescaled to hit u bitwise.
    """
    D = D_shift - H
    W, N = D.shape
    Ds = np.sort(D, axis=0)
    S = np.cumsum(Ds, axis=0)
    m = np.arange(1, W + 1, dtype=float)[:, None]
    V = (u[None, :] + S) / m
    # v uses the largest m whose prefix mean still exceeds the m-th smallest
    # breakpoint; m = 1 qualifies whenever u > 0.
    active = V > Ds
    idx = np.where(
        active.any(axis=0), (W - 1) - np.argmax(active[::-1], axis=0), 0
    )
    v = V[idx, np.arange(N)]
    zero = u <= 0.0
    if zero.any():
        v = np.where(zero, Ds[0], v)
    new = np.maximum(H - D_shift + v[None, :], 0.0)
    if zero.any():
        new[:, zero] = 0.0
    # rescale away float drift so rows restate the demand exactly
    sums = new.sum(axis=0)
    pos = sums > 0.0
    scale = np.ones(N)
    scale[pos] = u[pos] / sums[pos]
    new *= scale[None, :]
    return v, new


def fp_update(
    flow: WalkFlow,
    costs: Mapping[str, np.ndarray],
    targets: Mapping[str, np.ndarray],
    alpha: float,
) -> WalkFlow:
    """Apply the projection update to every (commodity, interval) row."""
    rates: dict[str, np.ndarray] = {}
    for cid in sorted(flow.rates):
        H = flow.rates[cid]
        if H.size == 0:
            rates[cid] = H.copy()
            continue
        C = costs[cid]
        if not np.isfinite(C).all():
            raise ValueError(f"non-finite walk cost for commodity {cid}")
        _, rates[cid] = _fp_update_columns(H, alpha * C, targets[cid])
    return WalkFlow(flow.grid.copy(), rates)


def step_size_update(
    alpha: float,
    h_old: WalkFlow,
    h_new: WalkFlow,
    norm: str = "l2",
) -> float:
    """gamma = 1 - |h1 - h0| / |h1 + h0|; alpha' = gamma*(gamma*alpha) +
    (1 - gamma)*alpha. All-zero flows leave alpha unchanged."""
    widths = h_old.widths()
    diff = {c: h_new.rates[c] - h_old.rates[c] for c in h_old.rates}
    summ = {c: h_new.rates[c] + h_old.rates[c] for c in h_old.rates}
    denom = flow_norm(summ, widths, norm)
    if denom == 0.0:
        return alpha
    gamma = 1.0 - flow_norm(diff, widths, norm) / denom
    return gamma * (gamma * alpha) + (1.0 - gamma) * alpha


def initial_flow(
    net: Network,
    catalog: WalkCatalog,
    grid: np.ndarray,
    mode: str = "shortest",
    given: WalkFlow | None = None,
) -> WalkFlow:
    """Starting iterate: all demand on the free-flow fastest walk per
    commodity ("shortest"), split evenly ("uniform"), or a caller-supplied
    flow re-validated against the grid ("file")."""
    targets = demand_targets(net, grid)
    if mode == "file":
        if given is None:
            raise ValueError("initialization 'file' needs a flow")
        if given.n_intervals != len(grid) - 1 or not np.allclose(
            given.grid, grid, rtol=0.0, atol=1e-12
        ):
            raise ValueError("initial flow grid does not match the run grid")
        return given.copy()
    flow = zero_flow(catalog, grid)
    for cid, walks in catalog.walks.items():
        if not walks:
            raise ValueError(f"commodity {cid} has no feasible walk")
        if mode == "shortest":
            best = min(range(len(walks)), key=lambda w: walks[w].free_flow_time)
            flow.rates[cid][best] = targets[cid]
        elif mode == "uniform":
            flow.rates[cid][:] = targets[cid][None, :] / len(walks)
        else:
            raise ValueError(f"unknown initialization {mode!r}")
    return flow


def _qopi_parts(
    flow: WalkFlow,
    costs: Mapping[str, np.ndarray],
    targets: Mapping[str, np.ndarray],
) -> tuple[float, float]:
    """(relative, absolute) flow-weighted relative cost excess, integrated
    over the horizon. Kept here so the loop avoids a metrics import cycle."""
    widths = flow.widths()
    rel = 0.0
    absolute = 0.0
    for cid in sorted(flow.rates):
        H = flow.rates[cid]
        if H.size == 0:
            continue
        C = costs[cid]
        cmin = C.min(axis=0)
        if float(cmin.min()) <= 0.0:
            raise ValueError(f"non-positive minimum cost for commodity {cid}")
        excess = (H * ((C - cmin[None, :]) / cmin[None, :])).sum(axis=0)
        num = float((excess * widths).sum())
        vol = float((targets[cid] * widths).sum())
        absolute += num
        if vol > 0.0:
            rel += num / vol
    return rel, absolute


def fixed_point_residual(
    flow: WalkFlow,
    net: Network,
    catalog: WalkCatalog,
    alpha: float,
    norm: str = "l2",
    loading_options: LoadingOptions | None = None,
) -> float:
    """Weighted norm of FP-Update(h) - h; zero exactly at a discretized
    equilibrium for any positive alpha."""
    targets = demand_targets(net, flow.grid)
    result = network_loading(net, catalog, flow, loading_options)
    costs = midpoint_costs(result, catalog, flow.grid)
    updated = fp_update(flow, costs, targets, alpha)
    diff = {c: updated.rates[c] - flow.rates[c] for c in flow.rates}
    return flow_norm(diff, flow.widths(), norm)


def run_fixed_point(
    net: Network,
    catalog: WalkCatalog,
    config: FixedPointConfig | None = None,
    given: WalkFlow | None = None,
    loading_options: LoadingOptions | None = None,
) -> EquilibriumResult:
    """Iterate loading -> midpoint costs -> FP-Update -> step-size rescale
    until the change between iterates drops below epsilon, the iteration cap
    is hit, or the wall-clock budget runs out. The returned flow always has
    a matching final loading and cost matrix attached."""
    config = config or FixedPointConfig()
    config.validate()
    infeasible = catalog.infeasible_commodities()
    if infeasible:
        raise ValueError(
            "no feasible walk for commodity " + ", ".join(infeasible)
        )
    horizon = net.horizon()
    grid = uniform_grid(horizon, config.intervals)
    targets = demand_targets(net, grid)
    widths = np.diff(grid)
    flow = initial_flow(net, catalog, grid, config.initialization, given)

    stats: list[IterationStats] = []
    termination = "max_iters"
    alpha = config.alpha0
    start = time.perf_counter()
    for k in range(1, config.max_iters + 1):
        t0 = time.perf_counter()
        result = network_loading(net, catalog, flow, loading_options)
        costs = midpoint_costs(result, catalog, grid, config.threads)
        t1 = time.perf_counter()
        new_flow = fp_update(flow, costs, targets, alpha)
        t2 = time.perf_counter()

        diff = {c: new_flow.rates[c] - flow.rates[c] for c in flow.rates}
        delta_abs = flow_norm(diff, widths, config.norm)
        base = flow_norm(flow.rates, widths, config.norm)
        delta_rel = delta_abs / base if base > 0.0 else math.inf
        qopi_rel, qopi_abs = _qopi_parts(flow, costs, targets)
        used_alpha = alpha
        # gamma always uses the weighted Euclidean norm; config.norm only
        # selects the termination measure
        alpha = step_size_update(alpha, flow, new_flow)
        flow = new_flow
        stats.append(
            IterationStats(
                k=k,
                delta_h_abs=delta_abs,
                delta_h_rel=delta_rel,
                qopi=qopi_rel,
                qopi_abs=qopi_abs,
                alpha=used_alpha,
                wall_time=time.perf_counter() - start,
                loading_s=t1 - t0,
                update_s=t2 - t1,
            )
        )
        delta = delta_abs if config.termination == "abs" else delta_rel
        if delta < config.epsilon:
            termination = "converged"
            break
        if time.perf_counter() - start > config.time_limit_s:
            termination = "time_limit"
            break

    final_loading = network_loading(net, catalog, flow, loading_options)
    final_costs = midpoint_costs(final_loading, catalog, grid, config.threads)
    return EquilibriumResult(
        flow=flow,
        grid=grid,
        stats=stats,
        termination=termination,
        loading=final_loading,
        costs=final_costs,
    )
