"""Solution-quality and profile measures on a sampled time grid.

All series are sampled at interval midpoints (a_{j-1} + a_j)/2. Integrals
over the horizon are the area under the piecewise linear interpolant of the
midpoint samples, extended constantly to the interval ends; on a uniform
grid this equals sum_j value_j * width_j.

Walk energy b_W sums the commodity's battery costs over the physical edges
of the walk (recuperation included); recharge gadget edges are excluded, so
a walk that recharges mid-route counts every unit it draws from the battery.
This is what lets profiles exceed the battery capacity once recharging
cycles appear.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .flows import WalkFlow, demand_targets
from .loading import LoadingResult
from .network import Network
from .walks import Walk, WalkCatalog


@dataclass
class TimeSeries:
    """Values sampled at strictly increasing times; NaN marks an absent
    sample (no used walk, or zero inflow)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must align")
        if len(self.times) > 1 and not (np.diff(self.times) > 0).all():
            raise ValueError("sample times must be strictly increasing")


def _integrate(values: np.ndarray, widths: np.ndarray) -> float:
    """Area under the midpoint interpolant, constant-extended to [0, T]."""
    return float((values * widths).sum())


def qopi(
    flow: WalkFlow,
    costs: Mapping[str, np.ndarray],
    targets: Mapping[str, np.ndarray],
    mode: str = "relative",
) -> float:
    """Flow-weighted relative cost excess over the per-interval minimum,
    integrated over the horizon and summed over commodities. Relative mode
    divides each commodity's integral by its total inflow volume."""
    if mode not in ("relative", "absolute"):
        raise ValueError(f"unknown qopi mode {mode!r}")
    widths = flow.widths()
    total = 0.0
    for cid in sorted(flow.rates):
        H = flow.rates[cid]
        if H.size == 0:
            continue
        C = np.asarray(costs[cid])
        cmin = C.min(axis=0)
        if float(cmin.min()) <= 0.0:
            raise ValueError(f"non-positive minimum cost for commodity {cid}")
        excess = (H * ((C - cmin[None, :]) / cmin[None, :])).sum(axis=0)
        num = _integrate(excess, widths)
        if mode == "absolute":
            total += num
        else:
            vol = _integrate(np.asarray(targets[cid]), widths)
            if vol > 0.0:
                total += num / vol
    return total


def delta_h(
    h_old: WalkFlow, h_new: WalkFlow, norm: str = "l2"
) -> tuple[float, float]:
    """(absolute, relative) weighted-norm change between two flows on the
    same grid; relative is +inf when the old flow is identically zero."""
    from .equilibrium import flow_norm

    widths = h_old.widths()
    diff = {c: h_new.rates[c] - h_old.rates[c] for c in h_old.rates}
    absolute = flow_norm(diff, widths, norm)
    base = flow_norm(h_old.rates, widths, norm)
    relative = absolute / base if base > 0.0 else math.inf
    return absolute, relative


def energy_consumption(walk: Walk, net: Network) -> float:
    """b_W: battery cost summed over the walk's physical edges, uncapped."""
    return sum(
        net.battery_cost(walk.commodity, eid)
        for eid in walk.edges
        if not net.edge(eid).is_gadget
    )


def _walk_energies(net: Network, catalog: WalkCatalog, cid: str) -> np.ndarray:
    return np.array(
        [energy_consumption(w, net) for w in catalog.walks[cid]], dtype=float
    )


def energy_profile(
    flow: WalkFlow,
    net: Network,
    catalog: WalkCatalog,
    targets: Mapping[str, np.ndarray] | None = None,
) -> TimeSeries:
    """eta: per-commodity mean energy consumed by the particles starting at
    each sample time, summed over commodities with inflow there. For a single
    commodity this is the demand-weighted average of b_W over used walks.
    Samples where no commodity has inflow are absent."""
    targets = targets if targets is not None else demand_targets(net, flow.grid)
    total = np.zeros(flow.n_intervals)
    any_demand = np.zeros(flow.n_intervals, dtype=bool)
    for cid in sorted(flow.rates):
        H = flow.rates[cid]
        u = np.asarray(targets[cid])
        pos = u > 0.0
        any_demand |= pos
        if H.size:
            num = _walk_energies(net, catalog, cid) @ H
            total[pos] += num[pos] / u[pos]
    values = np.where(any_demand, total, np.nan)
    return TimeSeries(flow.midpoints(), values)


def energy_stats(
    flow: WalkFlow,
    net: Network,
    catalog: WalkCatalog,
    targets: Mapping[str, np.ndarray] | None = None,
) -> dict[str, dict[str, TimeSeries]]:
    """Per commodity: min/max of b_W over used walks (h > 0) and the
    flow-weighted mean, per sample. Samples with no used walk are absent."""
    targets = targets if targets is not None else demand_targets(net, flow.grid)
    mids = flow.midpoints()
    out: dict[str, dict[str, TimeSeries]] = {}
    for cid in sorted(flow.rates):
        H = flow.rates[cid]
        n = flow.n_intervals
        lo = np.full(n, np.nan)
        hi = np.full(n, np.nan)
        mean = np.full(n, np.nan)
        if H.size:
            b = _walk_energies(net, catalog, cid)
            used = H > 0.0
            any_used = used.any(axis=0)
            bmat = np.where(used, b[:, None], np.nan)
            lo[any_used] = np.nanmin(bmat[:, any_used], axis=0)
            hi[any_used] = np.nanmax(bmat[:, any_used], axis=0)
            u = np.asarray(targets[cid])
            ok = any_used & (u > 0.0)
            mean[ok] = (b @ H[:, ok]) / u[ok]
        out[cid] = {
            "min": TimeSeries(mids, lo),
            "max": TimeSeries(mids, hi),
            "mean": TimeSeries(mids, mean),
        }
    return out


TRAVEL_TIME_COLUMNS = ("min", "max", "mean", "mean_of_min", "mean_of_max")


def travel_time_stats(
    loading: LoadingResult,
    flow: WalkFlow,
    catalog: WalkCatalog,
) -> dict[str, TimeSeries]:
    """Five consolidated series over used walks (h > 0) at the midpoints:
    overall min and max, the per-commodity mean travel time summed over
    commodities, and the means of the per-commodity minima and maxima."""
    mids = flow.midpoints()
    n = len(mids)
    per_min: list[np.ndarray] = []
    per_max: list[np.ndarray] = []
    mean_sum = np.zeros(n)
    any_used = np.zeros(n, dtype=bool)
    for cid in sorted(flow.rates):
        H = flow.rates[cid]
        if H.size == 0:
            continue
        walks = catalog.walks[cid]
        mu = np.vstack(
            [loading.walk_arrival(cid, w, mids) - mids for w in range(len(walks))]
        )
        used = H > 0.0
        masked = np.where(used, mu, np.nan)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            per_min.append(np.nanmin(masked, axis=0))
            per_max.append(np.nanmax(masked, axis=0))
        cnt = used.sum(axis=0)
        pos = cnt > 0
        any_used |= pos
        mean_sum[pos] += (
            np.where(used, mu, 0.0).sum(axis=0)[pos] / cnt[pos]
        )
    if not per_min:
        empty = np.full(n, np.nan)
        return {k: TimeSeries(mids, empty.copy()) for k in TRAVEL_TIME_COLUMNS}
    mins = np.vstack(per_min)
    maxs = np.vstack(per_max)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        overall_min = np.nanmin(mins, axis=0)
        overall_max = np.nanmax(maxs, axis=0)
        mean_of_min = np.nanmean(mins, axis=0)
        mean_of_max = np.nanmean(maxs, axis=0)
    mean = np.where(any_used, mean_sum, np.nan)
    return {
        "min": TimeSeries(mids, overall_min),
        "max": TimeSeries(mids, overall_max),
        "mean": TimeSeries(mids, mean),
        "mean_of_min": TimeSeries(mids, mean_of_min),
        "mean_of_max": TimeSeries(mids, mean_of_max),
    }
