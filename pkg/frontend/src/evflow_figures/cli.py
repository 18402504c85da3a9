"""figures: render solver CSV exports into PNG files.

Usage: figures <spec.json>

The spec file holds one figure object or a list of them; relative paths in
a spec are resolved against the spec file's directory. Exit code 0 when all
figures render, 1 on any error (the message names the offending file,
column, or spec key).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .figures import FigureSpec, plot


def load_specs(path: Path) -> list[FigureSpec]:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ValueError(
            f"{path}: expected a figure spec object or a non-empty list of them"
        )
    return [FigureSpec.from_mapping(entry, base_dir=path.parent) for entry in data]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render solver run CSVs into deterministic PNG figures.",
    )
    parser.add_argument("spec", help="figure spec JSON (one object or a list)")
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        specs = load_specs(Path(args.spec))
        for spec in specs:
            print(f"wrote {plot(spec)}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
