#!/usr/bin/env python3
"""Render the reference figure set from solved diamond-network runs.

Expects the run directories produced by scripts/run_example1.py (variants
a, b, c under --runs) and writes a figure spec plus PNGs under --out. The
spec file is kept next to the figures so the rendering is reproducible with
a bare `figures figures.json`.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from evflow_figures.cli import main as figures_main

ROOT = Path(__file__).resolve().parent.parent.parent


def run_entries(runs: Path, out: Path) -> list[dict]:
    entries: list[dict] = []
    for variant in ("a", "b", "c"):
        rundir = runs / f"example1{variant}"
        if not rundir.is_dir():
            print(f"skipping variant {variant}: no run at {rundir}", file=sys.stderr)
            continue
        entries.append(
            {
                "kind": "convergence",
                "inputs": {"convergence": str(rundir / "convergence.csv")},
                "title": f"variant {variant.upper()}",
                "output": str(out / f"convergence_{variant}.png"),
            }
        )
        entries.append(
            {
                "kind": "walk_panels",
                "inputs": {
                    "walk_flows": str(rundir / "walk_flows.csv"),
                    "costs": str(rundir / "costs.csv"),
                    "catalog": str(rundir / "catalog_c0.csv"),
                },
                "time_range": [0.0, 10.0],
                "title": f"variant {variant.upper()}",
                "output": str(out / f"walk_panels_{variant}.png"),
            }
        )
        entries.append(
            {
                "kind": "travel_time_stats",
                "inputs": {"travel_times": str(rundir / "travel_times.csv")},
                "title": f"variant {variant.upper()}",
                "output": str(out / f"travel_times_{variant}.png"),
            }
        )
    overlay = [
        ("b", "c"),
        ("a", "b"),
    ]
    for first, second in overlay:
        f, s = runs / f"example1{first}", runs / f"example1{second}"
        if f.is_dir() and s.is_dir():
            entries.append(
                {
                    "kind": "comparison_overlay",
                    "inputs": {
                        "profiles": [
                            str(f / "energy_profile.csv"),
                            str(s / "energy_profile.csv"),
                        ]
                    },
                    "labels": [
                        f"variant {first.upper()}",
                        f"variant {second.upper()}",
                    ],
                    "output": str(out / f"energy_overlay_{first}{second}.png"),
                }
            )
            break
    return entries


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--runs",
        type=Path,
        default=ROOT / "results",
        help="directory holding example1a/, example1b/, example1c/ run outputs",
    )
    parser.add_argument(
        "--out", type=Path, default=ROOT / "results" / "figures", help="figure directory"
    )
    args = parser.parse_args()

    entries = run_entries(args.runs, args.out)
    if not entries:
        print(f"no run directories under {args.runs}", file=sys.stderr)
        return 1
    args.out.mkdir(parents=True, exist_ok=True)
    spec_path = args.out / "figures.json"
    with open(spec_path, "w") as fh:
        json.dump(entries, fh, indent=2)
        fh.write("\n")
    print(f"spec: {spec_path}")
    return figures_main([str(spec_path)])


if __name__ == "__main__":
    sys.exit(main())
