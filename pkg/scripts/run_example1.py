#!/usr/bin/env python3
"""Run the three diamond-network variants at the reference settings and
print the headline numbers (termination, iterations, QoPI, walk shares,
tail split ratio). CSVs land in results/example1<variant>/."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from evflow.cli import main as cli_main  # noqa: E402
from evflow.export import read_walk_flows  # noqa: E402
from evflow.flows import uniform_grid  # noqa: E402


def support_table(outdir: Path, n_intervals: int, horizon: float) -> list[tuple[str, float]]:
    flow = read_walk_flows(outdir / "walk_flows.csv", uniform_grid(horizon, n_intervals))
    names = {}
    import csv

    with open(outdir / "catalog_c0.csv") as fh:
        for row in csv.DictReader(fh):
            names[int(row["walk_index"])] = row["edge_sequence"]
    widths = flow.widths()
    mass = {w: float((flow.rates["c0"][w] * widths).sum()) for w in names}
    total = sum(mass.values())
    return [(names[w], mass[w] / total) for w in sorted(mass) if mass[w] > 1e-9]


def tail_ratio(outdir: Path, n_intervals: int, horizon: float, a: str, b: str) -> float:
    flow = read_walk_flows(outdir / "walk_flows.csv", uniform_grid(horizon, n_intervals))
    import csv

    index = {}
    with open(outdir / "catalog_c0.csv") as fh:
        for row in csv.DictReader(fh):
            index[row["edge_sequence"]] = int(row["walk_index"])
    mids = flow.midpoints()
    sel = (mids >= 3.0) & (mids <= 10.0)
    ra = flow.rates["c0"][index[a], sel].mean()
    rb = flow.rates["c0"][index[b], sel].mean()
    return float(ra / rb)


def run(variant: str, outbase: Path, intervals: int, max_iters: int) -> None:
    instance = ROOT / "instances" / f"example1{variant}.json"
    outdir = outbase / f"example1{variant}"
    t0 = time.perf_counter()
    code = cli_main(
        [
            "solve",
            "--instance",
            str(instance),
            "--out",
            str(outdir),
            "--epsilon",
            "0.01",
            "--alpha0",
            "0.5",
            "--intervals",
            str(intervals),
            "--max-iters",
            str(max_iters),
        ]
    )
    elapsed = time.perf_counter() - t0
    print(f"[{variant}] exit={code} elapsed={elapsed:.1f}s")
    # the CLI bumps the suffix when the directory is taken
    resolved = outdir if (outdir / "walk_flows.csv").exists() else None
    if resolved is None:
        candidates = sorted(outbase.glob(f"example1{variant}*"))
        resolved = candidates[-1]
    for name, share in support_table(resolved, intervals, 10.0):
        print(f"    {name:<24s} {100 * share:6.2f}% of demand")
    pair = {
        "a": ("e1|e3|e4", "e2|e3|e4"),
        "b": ("e1|e3|e5", "e2|e3|e4"),
        "c": ("e1|e3|e5", "e2|e3|e4"),
    }[variant]
    ratio = tail_ratio(resolved, intervals, 10.0, *pair)
    print(f"    tail rate ratio {pair[0]} : {pair[1]} = {ratio:.4f}")
    print()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "results"), help="output base directory")
    ap.add_argument("--intervals", type=int, default=100)
    ap.add_argument("--max-iters", type=int, default=40_000)
    ap.add_argument(
        "--variants", default="abc", help="subset of 'abc' to run (default all)"
    )
    args = ap.parse_args()
    outbase = Path(args.out)
    np.set_printoptions(precision=4)
    for variant in args.variants:
        run(variant, outbase, args.intervals, args.max_iters)


if __name__ == "__main__":
    main()
