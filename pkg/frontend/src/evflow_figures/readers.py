"""Readers for the solver's CSV run artifacts.

This package is decoupled from the solver on purpose: the CSV files are the
interface, so their schemas are restated here rather than imported. Floats
are repr() round-trips, absent samples are empty cells, tables are dense in
their key columns. Any deviation raises SchemaError naming the column.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

import numpy as np

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
TRAVEL_TIME_COLUMNS = ("time", "min", "max", "mean", "mean_of_min", "mean_of_max")
CATALOG_COLUMNS = (
    "walk_index",
    "edge_sequence",
    "free_flow_time",
    "total_price",
    "min_battery",
)


class SchemaError(ValueError):
    """A CSV file does not match its documented schema."""


def _check_header(
    header: Sequence[str] | None, expected: Sequence[str], path: Path
) -> None:
    if header is None:
        raise SchemaError(
            f"{path}: empty file, expected header {','.join(expected)}"
        )
    missing = [c for c in expected if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {', '.join(missing)} (found {', '.join(header)})"
        )
    if list(header) != list(expected):
        raise SchemaError(
            f"{path}: column order must be {','.join(expected)}, found {','.join(header)}"
        )


def _read_rows(path: Path, expected: Sequence[str]) -> list[list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, expected, path)
        rows = list(reader)
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(expected):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(expected)} cells, found {len(row)}"
            )
    return rows


def _parse_float(cell: str, column: str, path: Path, lineno: int) -> float:
    if cell == "":
        return math.nan
    try:
        return float(cell)
    except ValueError:
        raise SchemaError(
            f"{path}:{lineno}: column {column}: not a number: {cell!r}"
        ) from None


def _parse_int(cell: str, column: str, path: Path, lineno: int) -> int:
    try:
        return int(cell)
    except ValueError:
        raise SchemaError(
            f"{path}:{lineno}: column {column}: not an integer: {cell!r}"
        ) from None


def read_convergence(path: str | Path) -> dict[str, np.ndarray]:
    """Per-iteration trace as column arrays keyed by CONVERGENCE_COLUMNS."""
    path = Path(path)
    rows = _read_rows(path, CONVERGENCE_COLUMNS)
    data: dict[str, list[float]] = {c: [] for c in CONVERGENCE_COLUMNS}
    for lineno, row in enumerate(rows, start=2):
        data["k"].append(float(_parse_int(row[0], "k", path, lineno)))
        for col, cell in zip(CONVERGENCE_COLUMNS[1:], row[1:]):
            data[col].append(_parse_float(cell, col, path, lineno))
    return {c: np.array(v) for c, v in data.items()}


def _read_walk_table(
    path: Path, columns: Sequence[str]
) -> dict[str, np.ndarray]:
    cells: dict[str, dict[tuple[int, int], float]] = {}
    for lineno, row in enumerate(_read_rows(path, columns), start=2):
        cid = row[0]
        widx = _parse_int(row[1], columns[1], path, lineno)
        j = _parse_int(row[2], columns[2], path, lineno)
        value = _parse_float(row[3], columns[3], path, lineno)
        cells.setdefault(cid, {})[(widx, j)] = value
    out: dict[str, np.ndarray] = {}
    for cid, entries in cells.items():
        n_walks = max(k[0] for k in entries) + 1
        n_intervals = max(k[1] for k in entries) + 1
        if len(entries) != n_walks * n_intervals:
            raise SchemaError(
                f"{path}: commodity {cid} has {len(entries)} rows, expected "
                f"{n_walks}x{n_intervals} dense ({columns[1]}, {columns[2]}) cells"
            )
        mat = np.empty((n_walks, n_intervals))
        for (widx, j), value in entries.items():
            mat[widx, j] = value
        out[cid] = mat
    return out


def read_walk_flows(path: str | Path) -> dict[str, np.ndarray]:
    """Per-commodity (n_walks, n_intervals) inflow-rate matrices."""
    return _read_walk_table(Path(path), WALK_FLOW_COLUMNS)


def read_costs(path: str | Path) -> dict[str, np.ndarray]:
    """Per-commodity (n_walks, n_intervals) midpoint-cost matrices."""
    return _read_walk_table(Path(path), COST_COLUMNS)


def _read_series_table(
    path: Path, columns: Sequence[str]
) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    times: list[float] = []
    data: list[list[float]] = [[] for _ in columns[1:]]
    for lineno, row in enumerate(_read_rows(path, columns), start=2):
        times.append(_parse_float(row[0], columns[0], path, lineno))
        for i, (col, cell) in enumerate(zip(columns[1:], row[1:])):
            data[i].append(_parse_float(cell, col, path, lineno))
    return np.array(times), {
        col: np.array(vals) for col, vals in zip(columns[1:], data)
    }


def read_energy_profile(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """(times, eta) of the mean energy consumption per departure time."""
    times, series = _read_series_table(Path(path), ENERGY_PROFILE_COLUMNS)
    return times, series["eta"]


def read_energy_stats(path: str | Path) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """(times, {min,max,mean}) of one commodity's per-walk energy spread."""
    return _read_series_table(Path(path), ENERGY_STATS_COLUMNS)


def read_travel_times(path: str | Path) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """(times, {min,max,mean,mean_of_min,mean_of_max}) travel-time stats."""
    return _read_series_table(Path(path), TRAVEL_TIME_COLUMNS)


def read_catalog_labels(path: str | Path) -> dict[int, str]:
    """walk_index -> edge-sequence label from a catalog_<cid>.csv file."""
    path = Path(path)
    labels: dict[int, str] = {}
    for lineno, row in enumerate(_read_rows(path, CATALOG_COLUMNS), start=2):
        labels[_parse_int(row[0], "walk_index", path, lineno)] = row[1]
    return labels
