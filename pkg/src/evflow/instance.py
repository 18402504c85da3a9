"""Instance file I/O.

An instance file is a single JSON document with sections nodes, edges,
commodities, edge_attrs and stations. It describes the base network; the
recharge gadgets are attached on build(). Capacities may be null, meaning
effectively uncapacitated (resolved to a never-binding finite value on
build). Infinities in numeric fields are written as the string "inf".

A TNTP network file can be imported: init_node/term_node become the edge
endpoints, free_flow_time becomes the transit time, capacity (times a scale
factor) becomes the rate capacity. Commodities, energy values and stations
come from a separate attrs document since TNTP files carry none of them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .network import (
    AggregationSpec,
    ChargeOption,
    ChargingStation,
    Commodity,
    Edge,
    EdgeAttrs,
    Network,
    build_battery_extended_network,
)

FORMAT_VERSION = 1


class InstanceError(ValueError):
    """Malformed instance document; message carries the JSON path."""


@dataclass
class Instance:
    """Base network plus charging stations, as described by an instance file."""

    name: str
    nodes: list[str]
    edges: list[Edge]
    commodities: list[Commodity]
    attrs: dict[tuple[str, str], EdgeAttrs] = field(default_factory=dict)
    stations: list[ChargingStation] = field(default_factory=list)

    def base_network(self) -> Network:
        return Network(
            self.nodes, self.edges, self.commodities, self.attrs, name=self.name
        )

    def build(self) -> Network:
        """Battery-extended network with resolved capacities."""
        return build_battery_extended_network(self.base_network(), self.stations)


# -- decoding ------------------------------------------------------------


def _fail(path: str, msg: str) -> InstanceError:
    return InstanceError(f"{path}: {msg}")


def _get(obj: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in obj:
        raise _fail(path, f"missing field {key!r}")
    return obj[key]


def _num(value: Any, path: str) -> float:
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise _fail(path, f"not a number: {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"not a number: {value!r}")
    return float(value)


def _opt_num(value: Any, path: str, default: float) -> float:
    if value is None:
        return default
    return _num(value, path)


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise _fail(path, f"not a non-empty string: {value!r}")
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise _fail(path, "expected a list")
    return value


def _dict(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise _fail(path, "expected an object")
    return value


def _decode_aggregation(value: Any, path: str) -> AggregationSpec:
    if value is None:
        return AggregationSpec()
    obj = _dict(value, path)
    variants = [k for k in ("lambda", "lambda_tilde") if k in obj]
    if len(variants) != 1:
        raise _fail(path, "needs exactly one of 'lambda' or 'lambda_tilde'")
    return AggregationSpec(variants[0], _num(obj[variants[0]], f"{path}.{variants[0]}"))


def _decode_inflow(value: Any, path: str) -> tuple[tuple[float, float, float], ...]:
    pieces = []
    for i, raw in enumerate(_list(value, path)):
        p = f"{path}[{i}]"
        piece = _list(raw, p)
        if len(piece) != 3:
            raise _fail(p, "expected [t_start, t_end, rate]")
        a, b, r = (_num(x, p) for x in piece)
        if not b > a:
            raise _fail(p, f"empty interval [{a}, {b})")
        if r < 0:
            raise _fail(p, f"negative rate {r}")
        pieces.append((a, b, r))
    return tuple(pieces)


def _decode_option(raw: Any, path: str) -> ChargeOption:
    obj = _dict(raw, path)
    full = bool(obj.get("full_recharge", False))
    delta = obj.get("delta")
    if delta is not None:
        delta = _num(delta, f"{path}.delta")
    if not full and delta is None:
        raise _fail(path, "needs 'delta' or 'full_recharge'")
    compatible = obj.get("compatible")
    if compatible is not None:
        compatible = frozenset(
            _str(c, f"{path}.compatible[{i}]") for i, c in enumerate(_list(compatible, f"{path}.compatible"))
        )
    cap = obj.get("capacity")
    if cap is not None:
        cap = _num(cap, f"{path}.capacity")
    return ChargeOption(
        mode=_str(_get(obj, "mode", path), f"{path}.mode"),
        duration=_num(_get(obj, "duration", path), f"{path}.duration"),
        price=_opt_num(obj.get("price"), f"{path}.price", 0.0),
        full_recharge=full,
        delta=delta,
        capacity=cap,
        compatible=compatible,
    )


def parse_instance(doc: Mapping[str, Any]) -> Instance:
    root = _dict(doc, "$")
    name = root.get("name", "")
    if name and not isinstance(name, str):
        raise _fail("$.name", "expected a string")

    nodes = [_str(v, f"$.nodes[{i}]") for i, v in enumerate(_list(_get(root, "nodes", "$"), "$.nodes"))]

    edges = []
    for i, raw in enumerate(_list(_get(root, "edges", "$"), "$.edges")):
        p = f"$.edges[{i}]"
        obj = _dict(raw, p)
        nu = obj.get("nu")
        if nu is not None:
            nu = _num(nu, f"{p}.nu")
            if not nu > 0:
                raise _fail(f"{p}.nu", f"capacity must be positive, got {nu}")
        tau = _num(_get(obj, "tau", p), f"{p}.tau")
        if not tau > 0:
            raise _fail(f"{p}.tau", f"transit time must be positive, got {tau}")
        edges.append(
            Edge(
                id=_str(_get(obj, "id", p), f"{p}.id"),
                tail=_str(_get(obj, "tail", p), f"{p}.tail"),
                head=_str(_get(obj, "head", p), f"{p}.head"),
                transit_time=tau,
                capacity=nu,
            )
        )

    commodities = []
    for i, raw in enumerate(_list(_get(root, "commodities", "$"), "$.commodities")):
        p = f"$.commodities[{i}]"
        obj = _dict(raw, p)
        b_init = _num(_get(obj, "b_init", p), f"{p}.b_init")
        b_max = _opt_num(obj.get("b_max"), f"{p}.b_max", b_init)
        commodities.append(
            Commodity(
                id=_str(_get(obj, "id", p), f"{p}.id"),
                source=_str(_get(obj, "source", p), f"{p}.source"),
                sink=_str(_get(obj, "sink", p), f"{p}.sink"),
                inflow=_decode_inflow(_get(obj, "inflow", p), f"{p}.inflow"),
                initial_battery=b_init,
                battery_capacity=b_max,
                price_budget=_opt_num(obj.get("p_max"), f"{p}.p_max", math.inf),
                aggregation=_decode_aggregation(obj.get("aggregation"), f"{p}.aggregation"),
            )
        )

    known_edges = {e.id for e in edges}
    known_cids = {c.id for c in commodities}
    attrs: dict[tuple[str, str], EdgeAttrs] = {}
    for i, raw in enumerate(_list(root.get("edge_attrs", []), "$.edge_attrs")):
        p = f"$.edge_attrs[{i}]"
        obj = _dict(raw, p)
        cid = _str(_get(obj, "commodity", p), f"{p}.commodity")
        eid = _str(_get(obj, "edge", p), f"{p}.edge")
        if cid not in known_cids:
            raise _fail(p, f"unknown commodity {cid!r}")
        if eid not in known_edges:
            raise _fail(p, f"unknown edge {eid!r}")
        attrs[(cid, eid)] = EdgeAttrs(
            battery_cost=_opt_num(obj.get("b"), f"{p}.b", 0.0),
            price=_opt_num(obj.get("p"), f"{p}.p", 0.0),
        )

    stations = []
    for i, raw in enumerate(_list(root.get("stations", []), "$.stations")):
        p = f"$.stations[{i}]"
        obj = _dict(raw, p)
        node = _str(_get(obj, "node", p), f"{p}.node")
        if node not in set(nodes):
            raise _fail(p, f"unknown station node {node!r}")
        options = tuple(
            _decode_option(o, f"{p}.options[{j}]")
            for j, o in enumerate(_list(_get(obj, "options", p), f"{p}.options"))
        )
        stations.append(ChargingStation(node=node, options=options))

    try:
        inst = Instance(name, nodes, edges, commodities, attrs, stations)
        inst.base_network()  # surface duplicate ids / dangling endpoints now
    except ValueError as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(str(exc)) from None
    return inst


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON: {exc}") from None
    inst = parse_instance(doc)
    if not inst.name:
        inst.name = path.stem
    return inst


# -- encoding ------------------------------------------------------------


def _enc_num(x: float) -> Any:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "name": inst.name,
        "nodes": list(inst.nodes),
        "edges": [
            {
                "id": e.id,
                "tail": e.tail,
                "head": e.head,
                "tau": e.transit_time,
                "nu": None if e.capacity is None else e.capacity,
            }
            for e in inst.edges
        ],
        "commodities": [],
        "edge_attrs": [],
        "stations": [],
    }
    for c in inst.commodities:
        obj: dict[str, Any] = {
            "id": c.id,
            "source": c.source,
            "sink": c.sink,
            "inflow": [list(piece) for piece in c.inflow],
            "b_init": c.initial_battery,
            "b_max": c.battery_capacity,
        }
        if not math.isinf(c.price_budget):
            obj["p_max"] = c.price_budget
        obj["aggregation"] = {c.aggregation.variant: c.aggregation.coeff}
        doc["commodities"].append(obj)
    for (cid, eid) in sorted(inst.attrs):
        a = inst.attrs[(cid, eid)]
        doc["edge_attrs"].append(
            {"commodity": cid, "edge": eid, "b": _enc_num(a.battery_cost), "p": a.price}
        )
    for st in inst.stations:
        options = []
        for o in st.options:
            obj = {"mode": o.mode, "duration": o.duration, "price": o.price}
            if o.full_recharge:
                obj["full_recharge"] = True
            if o.delta is not None:
                obj["delta"] = o.delta
            if o.capacity is not None:
                obj["capacity"] = o.capacity
            if o.compatible is not None:
                obj["compatible"] = sorted(o.compatible)
            options.append(obj)
        doc["stations"].append({"node": st.node, "options": options})
    return doc


def save_instance(inst: Instance, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2, sort_keys=False)
        fh.write("\n")


# -- TNTP import ---------------------------------------------------------

# canonical column order of the tab-delimited TNTP link table
_TNTP_COLUMNS = (
    "init_node",
    "term_node",
    "capacity",
    "length",
    "free_flow_time",
    "b",
    "power",
    "speed",
    "toll",
    "link_type",
)


def parse_tntp_network(text: str, capacity_scale: float = 1.0) -> tuple[list[str], list[Edge]]:
    """Nodes and physical edges from a TNTP network document.

    Metadata headers (<KEY> value) are honored for sanity checks; data rows
    are whitespace-delimited, optionally ';'-terminated, '~' starts a
    comment. Edge ids are 'e<init>_<term>' with a '#<n>' suffix on parallel
    links.
    """
    if not capacity_scale > 0:
        raise InstanceError(f"capacity scale must be positive, got {capacity_scale}")
    meta: dict[str, str] = {}
    rows: list[list[str]] = []
    in_meta = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("~", 1)[0].strip()
        if not line:
            continue
        if in_meta and line.startswith("<"):
            if line.upper().startswith("<END OF METADATA>"):
                in_meta = False
                continue
            key, _, value = line.partition(">")
            meta[key.strip("<> ").upper()] = value.strip()
            continue
        in_meta = False
        tokens = line.rstrip(";").split()
        if len(tokens) < 5:
            raise InstanceError(
                f"line {lineno}: expected at least 5 link columns "
                f"({', '.join(_TNTP_COLUMNS[:5])}), got {len(tokens)}"
            )
        rows.append(tokens)

    nodes: list[str] = []
    seen_nodes: set[str] = set()
    edges: list[Edge] = []
    ids: set[str] = set()
    for tokens in rows:
        tail, head = tokens[0], tokens[1]
        try:
            nu = float(tokens[2]) * capacity_scale
            tau = float(tokens[4])
        except ValueError as exc:
            raise InstanceError(f"link {tail}->{head}: {exc}") from None
        if not tau > 0:
            raise InstanceError(f"link {tail}->{head}: free_flow_time must be positive")
        if not nu > 0:
            raise InstanceError(f"link {tail}->{head}: capacity must be positive")
        for v in (tail, head):
            if v not in seen_nodes:
                seen_nodes.add(v)
                nodes.append(v)
        eid = f"e{tail}_{head}"
        k = 2
        while eid in ids:
            eid = f"e{tail}_{head}#{k}"
            k += 1
        ids.add(eid)
        edges.append(Edge(eid, tail, head, tau, nu))

    declared = meta.get("NUMBER OF LINKS")
    if declared and int(declared) != len(edges):
        raise InstanceError(
            f"header declares {declared} links, file has {len(edges)}"
        )
    declared = meta.get("NUMBER OF NODES")
    if declared and int(declared) != len(nodes):
        # zones/nodes without incident links are legal; only excess is wrong
        if len(nodes) > int(declared):
            raise InstanceError(
                f"header declares {declared} nodes, file references {len(nodes)}"
            )
        order = sorted(nodes, key=lambda v: (len(v), v))
        for n in range(1, int(declared) + 1):
            v = str(n)
            if v not in seen_nodes:
                seen_nodes.add(v)
                order.append(v)
        nodes = order
    return nodes, edges


def import_tntp(
    net_text: str,
    attrs_doc: Mapping[str, Any] | None = None,
    capacity_scale: float = 1.0,
    name: str = "",
) -> Instance:
    """Instance from a TNTP network document plus an attrs document.

    The attrs document reuses the instance sections (commodities, edge_attrs,
    stations); an empty one yields a network with zero energy costs and no
    commodities.
    """
    nodes, edges = parse_tntp_network(net_text, capacity_scale)
    merged: dict[str, Any] = {
        "name": name,
        "nodes": nodes,
        "edges": [
            {"id": e.id, "tail": e.tail, "head": e.head, "tau": e.transit_time, "nu": e.capacity}
            for e in edges
        ],
        "commodities": [],
    }
    if attrs_doc:
        extra = dict(_dict(attrs_doc, "attrs:$"))
        for key in ("nodes", "edges"):
            if key in extra:
                raise InstanceError(f"attrs document must not redefine {key!r}")
        merged.update(extra)
    return parse_instance(merged)


def import_tntp_files(
    net_path: str | Path,
    attrs_path: str | Path | None = None,
    capacity_scale: float = 1.0,
) -> Instance:
    net_path = Path(net_path)
    attrs_doc = None
    if attrs_path is not None:
        attrs_path = Path(attrs_path)
        try:
            attrs_doc = json.loads(attrs_path.read_text())
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{attrs_path}: invalid JSON: {exc}") from None
    inst = import_tntp(
        net_path.read_text(), attrs_doc, capacity_scale, name=net_path.stem
    )
    return inst
