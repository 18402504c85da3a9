#!/usr/bin/env python3
"""Regenerate the bundled instance files under instances/.

Writes the three single-commodity variants of the four-node diamond
(unconstrained, battery-constrained, battery-constrained with a charging
station) plus a Nguyen-shaped network as a TNTP file, an energy/commodity
attrs sidecar, and the imported instance produced from the two.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from evflow.instance import (  # noqa: E402
    Instance,
    import_tntp,
    parse_instance,
    save_instance,
)

OUT = ROOT / "instances"

TOY_EDGES = [
    {"id": "e1", "tail": "s", "head": "u", "tau": 1.0, "nu": 2.0},
    {"id": "e2", "tail": "s", "head": "u", "tau": 2.0, "nu": 1.0},
    {"id": "e3", "tail": "u", "head": "v", "tau": 1.0, "nu": 1.0},
    {"id": "e4", "tail": "v", "head": "t", "tau": 1.0, "nu": None},
    {"id": "e5", "tail": "v", "head": "t", "tau": 2.0, "nu": 0.5},
]

TOY_BATTERY = {"e1": 4.0, "e2": 2.0, "e3": 0.0, "e4": 4.0, "e5": 2.0}


def toy_doc(variant: str) -> dict:
    commodity = {
        "id": "c0",
        "source": "s",
        "sink": "t",
        "inflow": [[0.0, 10.0, 3.0]],
        "b_init": 6.0,
        "b_max": 6.0,
        "aggregation": {"lambda_tilde": 0.0},
    }
    doc = {
        "name": f"example1{variant}",
        "nodes": ["s", "u", "v", "t"],
        "edges": TOY_EDGES,
        "commodities": [commodity],
        "edge_attrs": [],
        "stations": [],
    }
    if variant in ("b", "c"):
        doc["edge_attrs"] = [
            {"commodity": "c0", "edge": eid, "b": b, "p": 0.0}
            for eid, b in TOY_BATTERY.items()
        ]
    if variant == "c":
        commodity["p_max"] = 6.0
        doc["stations"] = [
            {
                "node": "v",
                "options": [
                    {"mode": "m1", "duration": 1.5, "price": 0.0, "full_recharge": True},
                    {"mode": "m2", "duration": 1.0, "price": 7.0, "full_recharge": True},
                ],
            }
        ]
    return doc


# 13-node, 19-link network in the shape of the classic Nguyen-Dupuis
# example; free-flow times follow the usual published values, capacities
# are chosen so that rate capacities land near the commodity inflows after
# the 1/200 import scale.
NGUYEN_LINKS = [
    # (init, term, capacity, free_flow_time)
    (1, 5, 600, 7.0),
    (1, 12, 400, 9.0),
    (4, 5, 400, 9.0),
    (4, 9, 600, 12.0),
    (5, 6, 700, 3.0),
    (5, 9, 300, 9.0),
    (6, 7, 500, 5.0),
    (6, 10, 300, 13.0),
    (7, 8, 500, 5.0),
    (7, 11, 400, 9.0),
    (8, 2, 600, 9.0),
    (9, 10, 500, 10.0),
    (9, 13, 400, 9.0),
    (10, 11, 600, 6.0),
    (11, 2, 400, 9.0),
    (11, 3, 400, 8.0),
    (12, 6, 300, 7.0),
    (12, 8, 300, 14.0),
    (13, 3, 400, 11.0),
]

NGUYEN_BATTERY = {
    (1, 5): 1.0,
    (1, 12): 1.5,
    (4, 5): 1.5,
    (4, 9): 2.0,
    (5, 6): 0.5,
    (5, 9): 1.5,
    (6, 7): 1.0,
    (6, 10): 2.0,
    (7, 8): 1.0,
    (7, 11): 1.5,
    (8, 2): 1.5,
    (9, 10): 1.5,
    (9, 13): 1.5,
    (10, 11): 1.0,
    (11, 2): 1.5,
    (11, 3): 1.5,
    (12, 6): 1.0,
    (12, 8): 2.5,
    (13, 3): 2.0,
}

NGUYEN_ODS = [("1", "2"), ("1", "3"), ("4", "2"), ("4", "3")]

NGUYEN_CAPACITY_SCALE = 1.0 / 200.0


def nguyen_tntp() -> str:
    lines = [
        "<NUMBER OF ZONES> 4",
        "<NUMBER OF NODES> 13",
        "<FIRST THRU NODE> 1",
        f"<NUMBER OF LINKS> {len(NGUYEN_LINKS)}",
        "<END OF METADATA>",
        "",
        "~ \tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;",
    ]
    for (i, t, cap, fft) in NGUYEN_LINKS:
        lines.append(
            f"\t{i}\t{t}\t{cap}\t{fft}\t{fft}\t0.15\t4\t0\t0\t1\t;"
        )
    return "\n".join(lines) + "\n"


def nguyen_attrs() -> dict:
    commodities = []
    for k, (src, snk) in enumerate(NGUYEN_ODS):
        commodities.append(
            {
                "id": f"od{src}_{snk}",
                "source": src,
                "sink": snk,
                "inflow": [[0.0, 10.0, 3.0]],
                "b_init": 5.0,
                "b_max": 5.0,
                "aggregation": {"lambda_tilde": 0.1},
            }
        )
    edge_attrs = []
    for (i, t), b in sorted(NGUYEN_BATTERY.items()):
        for c in commodities:
            edge_attrs.append(
                {"commodity": c["id"], "edge": f"e{i}_{t}", "b": b, "p": 0.0}
            )
    stations = [
        {
            "node": "6",
            "options": [
                {"mode": "st6", "duration": 2.0, "price": 1.0, "full_recharge": True}
            ],
        },
        {
            "node": "8",
            "options": [
                {"mode": "st8", "duration": 1.5, "price": 2.0, "full_recharge": True}
            ],
        },
        {
            "node": "9",
            "options": [
                {"mode": "st9", "duration": 2.5, "price": 0.5, "full_recharge": True}
            ],
        },
    ]
    return {
        "commodities": commodities,
        "edge_attrs": edge_attrs,
        "stations": stations,
    }


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for variant in "abc":
        inst = parse_instance(toy_doc(variant))
        save_instance(inst, OUT / f"example1{variant}.json")
    tntp = nguyen_tntp()
    (OUT / "nguyen_net.tntp").write_text(tntp)
    attrs = nguyen_attrs()
    with open(OUT / "nguyen_attrs.json", "w") as fh:
        json.dump(attrs, fh, indent=2)
        fh.write("\n")
    inst = import_tntp(tntp, attrs, NGUYEN_CAPACITY_SCALE, name="nguyen")
    save_instance(inst, OUT / "nguyen.json")
    for path in sorted(OUT.iterdir()):
        print(path.relative_to(ROOT))


if __name__ == "__main__":
    main()
