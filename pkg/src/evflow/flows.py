"""Discretized walk flows.

The planning horizon [0, T] is split into N intervals by breakpoints
a_0 < ... < a_N. A walk flow h assigns every (commodity, walk, interval) a
constant inflow rate; rows (fixed commodity and interval) must sum to the
commodity's interval demand, the interval average of its network inflow rate.
Rates are stored as one (n_walks x N) array per commodity, rows ordered like
the walk catalog.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .network import Network
from .walks import WalkCatalog

MEMBERSHIP_RTOL = 1e-9


def uniform_grid(horizon: float, n_intervals: int) -> np.ndarray:
    if horizon <= 0 or n_intervals < 1:
        raise ValueError("need horizon > 0 and at least one interval")
    return np.linspace(0.0, horizon, n_intervals + 1)


def demand_targets(net: Network, grid: np.ndarray) -> dict[str, np.ndarray]:
    """Interval-averaged inflow per commodity (the row-sum targets)."""
    widths = np.diff(grid)
    out: dict[str, np.ndarray] = {}
    for c in net.commodities:
        vals = np.array(
            [c.inflow_integral(grid[j], grid[j + 1]) for j in range(len(widths))]
        )
        out[c.id] = vals / widths
    return out


@dataclass
class WalkFlow:
    """Piecewise-constant walk inflow rates on a shared interval grid."""

    grid: np.ndarray
    rates: dict[str, np.ndarray]

    @property
    def n_intervals(self) -> int:
        return len(self.grid) - 1

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def widths(self) -> np.ndarray:
        return np.diff(self.grid)

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.grid[:-1] + self.grid[1:])

    def copy(self) -> "WalkFlow":
        return WalkFlow(self.grid.copy(), {k: v.copy() for k, v in self.rates.items()})

    def total_mass(self) -> float:
        w = self.widths()
        return float(sum((v * w).sum() for v in self.rates.values()))

    def rate_events(self, cid: str, widx: int) -> list[tuple[float, float]]:
        """(time, new rate) changes for one walk, consecutive duplicates and
        leading zeros dropped, closed with a trailing zero."""
        row = self.rates[cid][widx]
        events: list[tuple[float, float]] = []
        current = 0.0
        for j, r in enumerate(row):
            r = float(r)
            if r != current:
                events.append((float(self.grid[j]), r))
                current = r
        if current != 0.0:
            events.append((float(self.grid[-1]), 0.0))
        return events


def zero_flow(catalog: WalkCatalog, grid: np.ndarray) -> WalkFlow:
    rates = {
        cid: np.zeros((len(ws), len(grid) - 1)) for cid, ws in catalog.walks.items()
    }
    return WalkFlow(grid.copy(), rates)


def membership_violation(
    net: Network, flow: WalkFlow, targets: Mapping[str, np.ndarray] | None = None
) -> float:
    """Largest relative row-sum mismatch against the demand targets.

    Also infinite if any rate is negative. Loading requires this to stay
    below MEMBERSHIP_RTOL.
    """
    targets = targets if targets is not None else demand_targets(net, flow.grid)
    worst = 0.0
    for cid, mat in flow.rates.items():
        if mat.size and float(mat.min()) < 0.0:
            return float("inf")
        sums = mat.sum(axis=0) if mat.size else np.zeros(flow.n_intervals)
        ref = np.maximum(np.abs(targets[cid]), 1.0)
        worst = max(worst, float(np.max(np.abs(sums - targets[cid]) / ref)))
    return worst
