"""CSV export and re-import of run artifacts.

All writers are deterministic: fixed column order, rows sorted by their key
columns, floats rendered with repr() (shortest round-trip form), absent
samples (NaN) as empty cells, and "\n" line endings regardless of platform.
Two runs over identical inputs produce byte-identical files. Every writer
has a reader such that read(write(x)) reproduces x exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .equilibrium import IterationStats
from .flows import WalkFlow
from .metrics import TRAVEL_TIME_COLUMNS, TimeSeries

CONVERGENCE_COLUMNS = (
    "k",
    "delta_h_abs",
    "delta_h_rel",
    "qopi",
    "qopi_abs",
    "alpha",
    "wall_time",
)

WALK_FLOW_COLUMNS = ("commodity", "walk_index", "interval", "rate")
COST_COLUMNS = ("commodity", "walk_index", "interval", "cost")
ENERGY_PROFILE_COLUMNS = ("time", "eta")
ENERGY_STATS_COLUMNS = ("time", "min", "max", "mean")


class SchemaError(ValueError):
    """A CSV file does not match its documented schema."""


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def _parse_cell(cell: str) -> float:
    return math.nan if cell == "" else float(cell)


def _open_writer(path: Path):
    return open(path, "w", newline="")


def _check_header(header: Sequence[str] | None, expected: Sequence[str], path: Path) -> None:
    if header is None:
        raise SchemaError(f"{path}: empty file, expected header {','.join(expected)}")
    missing = [c for c in expected if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {', '.join(missing)} (found {', '.join(header)})"
        )
    if list(header) != list(expected):
        raise SchemaError(
            f"{path}: column order must be {','.join(expected)}, found {','.join(header)}"
        )


# -- convergence ---------------------------------------------------------


def write_convergence(stats: Iterable[IterationStats], path: str | Path) -> Path:
    path = Path(path)
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(CONVERGENCE_COLUMNS)
        for s in stats:
            w.writerow(
                [
                    s.k,
                    _fmt(s.delta_h_abs),
                    _fmt(s.delta_h_rel),
                    _fmt(s.qopi),
                    _fmt(s.qopi_abs),
                    _fmt(s.alpha),
                    _fmt(s.wall_time),
                ]
            )
    return path


def read_convergence(path: str | Path) -> list[IterationStats]:
    path = Path(path)
    out: list[IterationStats] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, CONVERGENCE_COLUMNS, path)
        for row in reader:
            out.append(
                IterationStats(
                    k=int(row[0]),
                    delta_h_abs=_parse_cell(row[1]),
                    delta_h_rel=_parse_cell(row[2]),
                    qopi=_parse_cell(row[3]),
                    qopi_abs=_parse_cell(row[4]),
                    alpha=_parse_cell(row[5]),
                    wall_time=_parse_cell(row[6]),
                )
            )
    return out


# -- per (commodity, walk, interval) tables --------------------------------


def _write_walk_table(
    rates: Mapping[str, np.ndarray], path: Path, columns: Sequence[str]
) -> Path:
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for cid in sorted(rates):
            mat = rates[cid]
            for widx in range(mat.shape[0]):
                for j in range(mat.shape[1]):
                    w.writerow([cid, widx, j, _fmt(mat[widx, j])])
    return path


def _read_walk_table(
    path: Path, columns: Sequence[str]
) -> dict[str, np.ndarray]:
    cells: dict[str, dict[tuple[int, int], float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, columns, path)
        for row in reader:
            cid, widx, j, value = row[0], int(row[1]), int(row[2]), _parse_cell(row[3])
            cells.setdefault(cid, {})[(widx, j)] = value
    out: dict[str, np.ndarray] = {}
    for cid, entries in cells.items():
        n_walks = max(k[0] for k in entries) + 1
        n_intervals = max(k[1] for k in entries) + 1
        if len(entries) != n_walks * n_intervals:
            raise SchemaError(
                f"{path}: commodity {cid} has {len(entries)} rows, expected "
                f"{n_walks}x{n_intervals} dense (walk_index, interval) cells"
            )
        mat = np.empty((n_walks, n_intervals))
        for (widx, j), value in entries.items():
            mat[widx, j] = value
        out[cid] = mat
    return out


def write_walk_flows(flow: WalkFlow, path: str | Path) -> Path:
    return _write_walk_table(flow.rates, Path(path), WALK_FLOW_COLUMNS)


def read_walk_flows(path: str | Path, grid: np.ndarray) -> WalkFlow:
    """Rebuild a WalkFlow on a caller-supplied grid (the file stores interval
    indices, not breakpoints)."""
    rates = _read_walk_table(Path(path), WALK_FLOW_COLUMNS)
    grid = np.asarray(grid, dtype=float)
    for cid, mat in rates.items():
        if mat.shape[1] != len(grid) - 1:
            raise SchemaError(
                f"{path}: commodity {cid} has {mat.shape[1]} intervals, "
                f"grid expects {len(grid) - 1}"
            )
    return WalkFlow(grid, rates)


def write_costs(costs: Mapping[str, np.ndarray], path: str | Path) -> Path:
    return _write_walk_table(costs, Path(path), COST_COLUMNS)


def read_costs(path: str | Path) -> dict[str, np.ndarray]:
    return _read_walk_table(Path(path), COST_COLUMNS)


# -- time series tables ----------------------------------------------------


def _write_series_table(
    times: np.ndarray,
    series: Sequence[np.ndarray],
    columns: Sequence[str],
    path: Path,
) -> Path:
    with _open_writer(path) as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for i, t in enumerate(times):
            w.writerow([_fmt(t)] + [_fmt(col[i]) for col in series])
    return path


def _read_series_table(
    path: Path, columns: Sequence[str]
) -> tuple[np.ndarray, list[np.ndarray]]:
    times: list[float] = []
    data: list[list[float]] = [[] for _ in columns[1:]]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, columns, path)
        for row in reader:
            times.append(float(row[0]))
            for i, cell in enumerate(row[1:]):
                data[i].append(_parse_cell(cell))
    return np.array(times), [np.array(col) for col in data]


def write_energy_profile(series: TimeSeries, path: str | Path) -> Path:
    return _write_series_table(
        series.times, [series.values], ENERGY_PROFILE_COLUMNS, Path(path)
    )


def read_energy_profile(path: str | Path) -> TimeSeries:
    times, (values,) = _read_series_table(Path(path), ENERGY_PROFILE_COLUMNS)
    return TimeSeries(times, values)


def write_energy_stats(
    stats: Mapping[str, TimeSeries], path: str | Path
) -> Path:
    """One commodity's min/max/mean series."""
    times = stats["min"].times
    series = [stats[k].values for k in ENERGY_STATS_COLUMNS[1:]]
    return _write_series_table(times, series, ENERGY_STATS_COLUMNS, Path(path))


def read_energy_stats(path: str | Path) -> dict[str, TimeSeries]:
    times, series = _read_series_table(Path(path), ENERGY_STATS_COLUMNS)
    return {
        name: TimeSeries(times, values)
        for name, values in zip(ENERGY_STATS_COLUMNS[1:], series)
    }


TRAVEL_TIME_FILE_COLUMNS = ("time",) + TRAVEL_TIME_COLUMNS


def write_travel_times(
    stats: Mapping[str, TimeSeries], path: str | Path
) -> Path:
    times = stats["min"].times
    series = [stats[k].values for k in TRAVEL_TIME_COLUMNS]
    return _write_series_table(times, series, TRAVEL_TIME_FILE_COLUMNS, Path(path))


def read_travel_times(path: str | Path) -> dict[str, TimeSeries]:
    times, series = _read_series_table(Path(path), TRAVEL_TIME_FILE_COLUMNS)
    return {
        name: TimeSeries(times, values)
        for name, values in zip(TRAVEL_TIME_COLUMNS, series)
    }
