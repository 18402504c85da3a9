#!/usr/bin/env python3
"""Solve the bundled Nguyen-shaped instance and print per-commodity walk
usage plus the convergence trace tail. CSVs land in results/nguyen/."""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from evflow.cli import main as cli_main  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "results" / "nguyen"))
    ap.add_argument("--intervals", type=int, default=50)
    ap.add_argument("--max-iters", type=int, default=2000)
    ap.add_argument("--epsilon", type=float, default=0.01)
    args = ap.parse_args()

    instance = ROOT / "instances" / "nguyen.json"
    t0 = time.perf_counter()
    code = cli_main(
        [
            "solve",
            "--instance",
            str(instance),
            "--out",
            args.out,
            "--epsilon",
            str(args.epsilon),
            "--alpha0",
            "0.5",
            "--intervals",
            str(args.intervals),
            "--max-iters",
            str(args.max_iters),
        ]
    )
    elapsed = time.perf_counter() - t0
    print(f"exit={code} elapsed={elapsed:.1f}s")

    outdir = Path(args.out)
    if not (outdir / "convergence.csv").exists():
        outdir = sorted(Path(args.out).parent.glob(Path(args.out).name + "*"))[-1]
    with open(outdir / "convergence.csv") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows[-3:]:
        print(
            f"k={row['k']:>5s} delta_h={float(row['delta_h_abs']):.4e} "
            f"qopi={float(row['qopi']):.4e} alpha={float(row['alpha']):.3e}"
        )
    with open(outdir / "walk_flows.csv") as fh:
        per_commodity: dict[str, dict[str, float]] = {}
        for row in csv.DictReader(fh):
            cid = row["commodity"]
            per_commodity.setdefault(cid, {}).setdefault(row["walk_index"], 0.0)
            per_commodity[cid][row["walk_index"]] += float(row["rate"])
    for cid in sorted(per_commodity):
        used = {w: v for w, v in per_commodity[cid].items() if v > 1e-9}
        print(f"{cid}: {len(used)} used walks of {len(per_commodity[cid])}")


if __name__ == "__main__":
    main()
