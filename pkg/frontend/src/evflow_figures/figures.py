"""Figure construction from solver CSV exports.

Rendering is deterministic: fixed figure sizes, fonts, and dpi, explicit
legend placement, and a pinned PNG Software tag, so identical CSVs give
byte-identical images under one matplotlib version.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Any, Mapping

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt
import numpy as np

from . import readers

KINDS = (
    "convergence",
    "walk_panels",
    "energy_profile",
    "travel_time_stats",
    "comparison_overlay",
)

# required input roles per kind; walk_panels also accepts an optional
# "catalog" role supplying trace labels
REQUIRED_INPUTS: dict[str, tuple[str, ...]] = {
    "convergence": ("convergence",),
    "walk_panels": ("walk_flows", "costs"),
    "energy_profile": ("energy_profile",),
    "travel_time_stats": ("travel_times",),
    "comparison_overlay": ("profiles",),
}
OPTIONAL_INPUTS: dict[str, tuple[str, ...]] = {"walk_panels": ("catalog",)}

_SPEC_KEYS = ("kind", "inputs", "output", "labels", "title", "time_range")

DPI = 150
PNG_METADATA = {"Software": "evflow-figures"}
RC = {
    "figure.dpi": DPI,
    "savefig.dpi": DPI,
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8.0,
}


@dataclasses.dataclass
class FigureSpec:
    """One figure: what kind, which CSVs, where the PNG goes.

    inputs maps the kind's input roles to CSV paths (comparison_overlay's
    "profiles" role takes a list of paths). labels override the default
    trace labels, time_range=(t0, t1) maps walk-panel interval indices to
    interval-midpoint times.
    """

    kind: str
    inputs: dict[str, Any]
    output: str | Path
    labels: list[str] | None = None
    title: str | None = None
    time_range: tuple[float, float] | None = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}, expected one of {', '.join(KINDS)}"
            )
        required = REQUIRED_INPUTS[self.kind]
        allowed = required + OPTIONAL_INPUTS.get(self.kind, ())
        for role in required:
            if role not in self.inputs:
                raise ValueError(f"{self.kind}: missing input {role!r}")
        for role in self.inputs:
            if role not in allowed:
                raise ValueError(
                    f"{self.kind}: unknown input {role!r}, expected {', '.join(allowed)}"
                )
        if self.time_range is not None:
            t0, t1 = self.time_range
            if not t1 > t0:
                raise ValueError(f"time_range must increase, got ({t0}, {t1})")

    @classmethod
    def from_mapping(
        cls, data: Mapping[str, Any], base_dir: Path | None = None
    ) -> "FigureSpec":
        """Build from a parsed JSON object, resolving relative paths
        against base_dir (the spec file's directory)."""
        unknown = [k for k in data if k not in _SPEC_KEYS]
        if unknown:
            raise ValueError(
                f"unknown figure spec keys: {', '.join(sorted(unknown))}"
            )
        for key in ("kind", "inputs", "output"):
            if key not in data:
                raise ValueError(f"figure spec missing key {key!r}")

        def resolve(p: str) -> str:
            path = Path(p)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return str(path)

        inputs: dict[str, Any] = {}
        for role, value in dict(data["inputs"]).items():
            if isinstance(value, (list, tuple)):
                inputs[role] = [resolve(str(v)) for v in value]
            else:
                inputs[role] = resolve(str(value))
        time_range = data.get("time_range")
        if time_range is not None:
            time_range = (float(time_range[0]), float(time_range[1]))
        spec = cls(
            kind=str(data["kind"]),
            inputs=inputs,
            output=resolve(str(data["output"])),
            labels=list(data["labels"]) if data.get("labels") else None,
            title=data.get("title"),
            time_range=time_range,
        )
        spec.validate()
        return spec


def _trace_labels(spec: FigureSpec, n: int, default: list[str]) -> list[str]:
    if spec.labels is None:
        return default
    if len(spec.labels) != n:
        raise ValueError(
            f"{spec.kind}: {len(spec.labels)} labels for {n} traces"
        )
    return list(spec.labels)


def _log_plot(ax, x: np.ndarray, y: np.ndarray, label: str) -> None:
    # log-scale axes drop non-positive samples; mask them explicitly so the
    # drawn data is well defined
    mask = np.isfinite(y) & (y > 0) & (x > 0)
    ax.plot(x[mask], y[mask], label=label)


def _build_convergence(spec: FigureSpec) -> plt.Figure:
    trace = readers.read_convergence(spec.inputs["convergence"])
    labels = _trace_labels(spec, 2, ["delta_h", "QoPI"])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    _log_plot(ax, trace["k"], trace["delta_h_abs"], labels[0])
    _log_plot(ax, trace["k"], trace["qopi"], labels[1])
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("iteration k")
    ax.set_ylabel("termination measure")
    ax.legend(loc="upper right")
    if spec.title:
        ax.set_title(spec.title)
    return fig


def _panel_x(spec: FigureSpec, n_intervals: int) -> tuple[np.ndarray, str]:
    if spec.time_range is None:
        return np.arange(n_intervals, dtype=float), "interval"
    t0, t1 = spec.time_range
    width = (t1 - t0) / n_intervals
    return t0 + (np.arange(n_intervals) + 0.5) * width, "time"


def _walk_labels(spec: FigureSpec, cid: str, n_walks: int) -> list[str]:
    default = [f"walk {w}" for w in range(n_walks)]
    if "catalog" in spec.inputs:
        catalog = readers.read_catalog_labels(spec.inputs["catalog"])
        default = [catalog.get(w, default[w]) for w in range(n_walks)]
    if spec.labels is None:
        return default
    if len(spec.labels) != n_walks:
        raise ValueError(
            f"{spec.kind}: {len(spec.labels)} labels for {n_walks} walks "
            f"of commodity {cid}"
        )
    return list(spec.labels)


def _build_walk_panels(spec: FigureSpec) -> plt.Figure:
    flows = readers.read_walk_flows(spec.inputs["walk_flows"])
    costs = readers.read_costs(spec.inputs["costs"])
    if sorted(flows) != sorted(costs):
        raise readers.SchemaError(
            f"walk_flows and costs disagree on commodities: "
            f"{sorted(flows)} vs {sorted(costs)}"
        )
    cids = sorted(flows)
    for cid in cids:
        if flows[cid].shape != costs[cid].shape:
            raise readers.SchemaError(
                f"commodity {cid}: walk_flows is {flows[cid].shape}, "
                f"costs is {costs[cid].shape}"
            )
    if len(cids) > 1 and spec.labels is not None:
        raise ValueError("labels require a single-commodity walk table")

    ncols = len(cids)
    fig, axes = plt.subplots(
        3, ncols, figsize=(5.2 * ncols, 6.8), sharex="col", squeeze=False
    )
    for col, cid in enumerate(cids):
        h, c = flows[cid], costs[cid]
        x, xlabel = _panel_x(spec, h.shape[1])
        labels = _walk_labels(spec, cid, h.shape[0])
        # flow-weighted relative cost excess per walk per sample
        cmin = np.nanmin(c, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            excess = np.where(cmin > 0, h * (c - cmin) / cmin, np.nan)
        for w in range(h.shape[0]):
            axes[0][col].plot(x, h[w], label=labels[w])
            axes[1][col].plot(x, c[w], label=labels[w])
            axes[2][col].plot(x, excess[w], label=labels[w])
        axes[0][col].set_title(cid if spec.title is None else spec.title)
        axes[0][col].legend(loc="upper right")
        axes[2][col].set_xlabel(xlabel)
    axes[0][0].set_ylabel("inflow rate")
    axes[1][0].set_ylabel("cost")
    axes[2][0].set_ylabel("per-walk QoPI")
    return fig


def _build_energy_profile(spec: FigureSpec) -> plt.Figure:
    times, eta = readers.read_energy_profile(spec.inputs["energy_profile"])
    labels = _trace_labels(spec, 1, ["eta"])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(times, eta, label=labels[0])
    ax.set_xlabel("departure time")
    ax.set_ylabel("energy per unit of flow")
    ax.legend(loc="upper right")
    if spec.title:
        ax.set_title(spec.title)
    return fig


def _build_travel_time_stats(spec: FigureSpec) -> plt.Figure:
    times, series = readers.read_travel_times(spec.inputs["travel_times"])
    names = list(readers.TRAVEL_TIME_COLUMNS[1:])
    labels = _trace_labels(spec, len(names), names)
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, label in zip(names, labels):
        ax.plot(times, series[name], label=label)
    ax.set_xlabel("departure time")
    ax.set_ylabel("travel time")
    ax.legend(loc="upper right")
    if spec.title:
        ax.set_title(spec.title)
    return fig


def _build_comparison_overlay(spec: FigureSpec) -> plt.Figure:
    paths = spec.inputs["profiles"]
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if not paths:
        raise ValueError("comparison_overlay: profiles list is empty")
    labels = _trace_labels(spec, len(paths), [Path(p).parent.name or Path(p).stem for p in paths])
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for path, label in zip(paths, labels):
        times, eta = readers.read_energy_profile(path)
        ax.plot(times, eta, label=label)
    ax.set_xlabel("departure time")
    ax.set_ylabel("energy per unit of flow")
    ax.legend(loc="upper right")
    if spec.title:
        ax.set_title(spec.title)
    return fig


_BUILDERS = {
    "convergence": _build_convergence,
    "walk_panels": _build_walk_panels,
    "energy_profile": _build_energy_profile,
    "travel_time_stats": _build_travel_time_stats,
    "comparison_overlay": _build_comparison_overlay,
}


def build_figure(spec: FigureSpec) -> plt.Figure:
    """Validate the spec, read its CSVs, and return the assembled figure."""
    spec.validate()
    with plt.rc_context(RC):
        return _BUILDERS[spec.kind](spec)


def plot(spec: FigureSpec) -> Path:
    """Render the spec to its output PNG and return the written path."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        with plt.rc_context(RC):
            fig.savefig(out, format="png", metadata=dict(PNG_METADATA))
    finally:
        plt.close(fig)
    return out
