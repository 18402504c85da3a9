"""Command-line interface: walk enumeration, equilibrium runs, TNTP import.

Exit codes: 0 success (solve: converged), 1 error (bad input, no feasible
walk, solver failure), 2 resource-limited termination (iteration cap or
wall-clock limit; partial results are still written).

All result files are deterministic: identical inputs yield byte-identical
CSVs. The run manifest records provenance and is written before the solve
starts; its timestamp field is the only non-reproducible output.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from .equilibrium import (
    INITIALIZATIONS,
    NORMS,
    TERMINATIONS,
    FixedPointConfig,
    run_fixed_point,
)
from .export import (
    read_walk_flows,
    write_convergence,
    write_costs,
    write_energy_profile,
    write_energy_stats,
    write_travel_times,
    write_walk_flows,
)
from .flows import demand_targets, uniform_grid
from .instance import Instance, InstanceError, import_tntp_files, load_instance, save_instance
from .loading import LoadingError
from .metrics import energy_profile, energy_stats, travel_time_stats
from .network import Network
from .walks import WalkCatalog, build_catalog, write_catalog

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_LIMIT = 2

# config-file keys and their FixedPointConfig fields
_CONFIG_KEYS = {
    "epsilon": "epsilon",
    "alpha0": "alpha0",
    "N": "intervals",
    "max_iters": "max_iters",
    "time_limit_s": "time_limit_s",
    "initialization": "initialization",
    "termination_mode": "termination",
    "norm_weights": "norm",
    "threads": "threads",
}


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_ERROR


def unique_outdir(base: str | Path) -> Path:
    """The directory itself if unused, else the first free suffix _2, _3, ..."""
    base = Path(base)
    if not base.exists() or (base.is_dir() and not any(base.iterdir())):
        return base
    k = 2
    while True:
        candidate = base.with_name(f"{base.name}_{k}")
        if not candidate.exists():
            return candidate
        k += 1


def _default_threads() -> int:
    env = os.environ.get("EVQ_THREADS", "")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _load_config_file(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"{path}: cannot read config: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceError(f"{path}: config must be a JSON object")
    unknown = set(doc) - set(_CONFIG_KEYS) - {"init_flow"}
    if unknown:
        raise InstanceError(
            f"{path}: unknown config keys {', '.join(sorted(unknown))}"
        )
    return doc


def resolve_config(args: argparse.Namespace) -> tuple[FixedPointConfig, str | None]:
    """Config file first, then CLI flags on top; returns the config plus the
    walk-flow file for initialization='file' runs (if any)."""
    cfg = FixedPointConfig(threads=_default_threads())
    init_flow: str | None = None
    if args.config:
        doc = _load_config_file(args.config)
        for key, field in _CONFIG_KEYS.items():
            if key in doc:
                setattr(cfg, field, type(getattr(cfg, field))(doc[key]))
        init_flow = doc.get("init_flow")
    overrides = {
        "epsilon": args.epsilon,
        "alpha0": args.alpha0,
        "intervals": args.intervals,
        "max_iters": args.max_iters,
        "time_limit_s": args.time_limit_s,
        "initialization": args.init,
        "termination": args.termination,
        "norm": args.norm,
        "threads": args.threads,
    }
    for field, value in overrides.items():
        if value is not None:
            setattr(cfg, field, value)
    if getattr(args, "init_flow", None):
        init_flow = args.init_flow
    cfg.validate()
    if cfg.initialization == "file" and not init_flow:
        raise InstanceError(
            "initialization 'file' needs --init-flow (or config key init_flow)"
        )
    return cfg, init_flow


def _load_built_network(path: str) -> tuple[Instance, Network]:
    inst = load_instance(path)
    return inst, inst.build()


def _check_feasible(catalog: WalkCatalog) -> str | None:
    missing = catalog.infeasible_commodities()
    if missing:
        return (
            "no energy-feasible walk could be found for commodity "
            + ", ".join(missing)
        )
    return None


# -- subcommands -----------------------------------------------------------


def cmd_enumerate(args: argparse.Namespace) -> int:
    try:
        _, net = _load_built_network(args.instance)
        catalog = build_catalog(net)
    except (InstanceError, ValueError) as exc:
        return _err(str(exc))
    message = _check_feasible(catalog)
    if message is not None:
        return _err(message)
    if args.out:
        outdir = unique_outdir(args.out)
        write_catalog(catalog, outdir)
        print(f"catalog written to {outdir}")
    total = 0
    for cid in sorted(catalog.walks):
        n = catalog.n_walks(cid)
        total += n
        print(f"commodity {cid}: {n} walks")
    print(f"total: {total} walks")
    return EXIT_OK


def write_manifest(
    outdir: Path, instance: str, config: str | None, cfg: FixedPointConfig
) -> Path:
    manifest = {
        "tool": "evflow",
        "tool_version": __version__,
        "instance": str(instance),
        "config_file": str(config) if config else None,
        "config": dataclasses.asdict(cfg),
        "output_dir": str(outdir),
        "deterministic": True,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    if math.isinf(manifest["config"]["time_limit_s"]):
        manifest["config"]["time_limit_s"] = "inf"
    path = outdir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def write_loading_debug(result, outdir: Path) -> Path:
    """Per-edge queue and cumulative in/outflow at the queue breakpoints."""
    path = outdir / "loading_debug.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "theta", "F_plus", "F_minus", "q"])
        for eid in sorted(result.edges):
            rec = result.edges[eid]
            for t, q in zip(rec.queue_t, rec.queue_v):
                w.writerow(
                    [
                        eid,
                        repr(float(t)),
                        repr(float(rec.cum_in(t))),
                        repr(float(rec.cum_out(t))),
                        repr(float(q)),
                    ]
                )
    return path


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        cfg, init_flow_path = resolve_config(args)
        inst, net = _load_built_network(args.instance)
        catalog = build_catalog(net)
        message = _check_feasible(catalog)
        if message is not None:
            return _err(message)

        outdir = unique_outdir(args.out or f"{Path(args.instance).stem}_run")
        outdir.mkdir(parents=True, exist_ok=True)
        write_manifest(outdir, args.instance, args.config, cfg)
        write_catalog(catalog, outdir)

        given = None
        if cfg.initialization == "file":
            grid = uniform_grid(net.horizon(), cfg.intervals)
            given = read_walk_flows(init_flow_path, grid)

        result = run_fixed_point(net, catalog, cfg, given=given)
    except (InstanceError, LoadingError, ValueError, OSError) as exc:
        return _err(str(exc))

    write_convergence(result.stats, outdir / "convergence.csv")
    write_walk_flows(result.flow, outdir / "walk_flows.csv")
    write_costs(result.costs, outdir / "costs.csv")
    targets = demand_targets(net, result.grid)
    write_energy_profile(
        energy_profile(result.flow, net, catalog, targets),
        outdir / "energy_profile.csv",
    )
    for cid, stats in energy_stats(result.flow, net, catalog, targets).items():
        write_energy_stats(stats, outdir / f"energy_stats_{cid}.csv")
    write_travel_times(
        travel_time_stats(result.loading, result.flow, catalog),
        outdir / "travel_times.csv",
    )
    if args.dump_loading:
        write_loading_debug(result.loading, outdir)

    final = result.stats[-1] if result.stats else None
    print(f"run directory: {outdir}")
    print(f"termination: {result.termination} after {result.iterations} iterations")
    if final is not None:
        print(
            f"delta_h: {final.delta_h_abs:.6g}  qopi: {final.qopi:.6g}  "
            f"wall time: {final.wall_time:.2f}s"
        )
    return EXIT_OK if result.converged else EXIT_LIMIT


def cmd_import_tntp(args: argparse.Namespace) -> int:
    try:
        inst = import_tntp_files(args.net, args.attrs, args.scale)
        if args.name:
            inst.name = args.name
        save_instance(inst, args.out_instance)
    except (InstanceError, OSError) as exc:
        return _err(str(exc))
    n_nodes = len(inst.nodes)
    n_edges = len(inst.edges)
    print(
        f"imported {n_nodes} nodes, {n_edges} edges, "
        f"{len(inst.commodities)} commodities -> {args.out_instance}"
    )
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evflow",
        description=(
            "Approximate energy-feasible dynamic traffic equilibria for "
            "electric vehicles under Vickrey point queues."
        ),
    )
    parser.add_argument("--version", action="version", version=f"evflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_enum = sub.add_parser(
        "enumerate", help="enumerate energy-feasible walks per commodity"
    )
    p_enum.add_argument("--instance", required=True, help="instance JSON file")
    p_enum.add_argument("--out", help="directory for catalog CSVs (optional)")
    p_enum.set_defaults(func=cmd_enumerate)

    p_solve = sub.add_parser("solve", help="run the fixed-point solver")
    p_solve.add_argument("--instance", required=True, help="instance JSON file")
    p_solve.add_argument("--config", help="run config JSON file")
    p_solve.add_argument("--out", help="output directory (suffix-counter unique)")
    p_solve.add_argument("--epsilon", type=float, help="termination threshold")
    p_solve.add_argument("--alpha0", type=float, help="initial step size")
    p_solve.add_argument("--intervals", type=int, help="number of grid intervals N")
    p_solve.add_argument("--max-iters", type=int, help="iteration cap")
    p_solve.add_argument("--time-limit-s", type=float, help="wall-clock budget")
    p_solve.add_argument(
        "--init", choices=INITIALIZATIONS, help="initial flow construction"
    )
    p_solve.add_argument(
        "--init-flow", help="walk_flows.csv to start from (with --init file)"
    )
    p_solve.add_argument("--norm", choices=NORMS, help="termination norm")
    p_solve.add_argument(
        "--termination", choices=TERMINATIONS, help="abs or rel change criterion"
    )
    p_solve.add_argument(
        "--threads", type=int, help="cost-evaluation threads (EVQ_THREADS fallback)"
    )
    p_solve.add_argument(
        "--dump-loading",
        action="store_true",
        help="write per-edge queue/cumulative breakpoints",
    )
    p_solve.set_defaults(func=cmd_solve)

    p_tntp = sub.add_parser("import-tntp", help="build an instance from TNTP data")
    p_tntp.add_argument("--net", required=True, help="TNTP network file")
    p_tntp.add_argument("--attrs", help="JSON attrs document (commodities, energy)")
    p_tntp.add_argument(
        "--scale", type=float, default=1.0, help="capacity scale factor"
    )
    p_tntp.add_argument("--name", help="instance name override")
    p_tntp.add_argument("--out-instance", required=True, help="output instance path")
    p_tntp.set_defaults(func=cmd_import_tntp)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
