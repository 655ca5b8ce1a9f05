"""
Topology documents.

A topology file is a YAML mapping (JSON works too) with these sections:

    defaults:          # profile fields inherited by every link
      t_attempt: 10    # durations are nanoseconds
      f_link: 0.97
    nodes: [A, R, B]
    links:
      - {a: A, b: R}
      - {a: R, b: B, p_gen: 0.5}
    graph_resource:    # optional pre-shared graph state
      q_meas: 0.99
      edges:
        - {a: A, b: B, factor: 0.98}

Every invariant violation is collected and reported with its source line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import yaml

from .errors import TopologyError
from .network import HardwareProfile, Topology
from .strategies import GraphResource

# field -> (kind, lower, upper, lower_inclusive)
_PROFILE_BOUNDS = {
    "p_gen": ("prob", 0.0, 1.0, False),
    "p_swap": ("prob", 0.0, 1.0, False),
    "q_swap": ("prob", 0.0, 1.0, False),
    "q_gate": ("prob", 0.0, 1.0, False),
    "f_link": ("prob", 0.0, 1.0, True),
    "t_attempt": ("duration", 0.0, math.inf, True),
    "t_swap": ("duration", 0.0, math.inf, True),
    "t_classical": ("duration", 0.0, math.inf, True),
    "tau_memory": ("duration", 0.0, math.inf, False),
    "max_attempts": ("count", 1, math.inf, True),
}

_SECTIONS = ("defaults", "nodes", "links", "graph_resource")


@dataclass
class Scenario:
    topology: Topology
    resource: GraphResource | None = None


class _Reader:
    def __init__(self, source: str):
        self.source = source
        self.diagnostics: list[str] = []
        self._constructor = yaml.SafeLoader("")

    def error(self, node, message: str) -> None:
        line = node.start_mark.line + 1 if node is not None else "?"
        self.diagnostics.append(f"{self.source}:{line}: {message}")

    def value(self, node):
        return self._constructor.construct_object(node, deep=True)

    def mapping(self, node, what: str) -> list[tuple[str, yaml.Node, yaml.Node]] | None:
        if not isinstance(node, yaml.MappingNode):
            self.error(node, f"{what} must be a mapping")
            return None
        out = []
        seen = set()
        for k, v in node.value:
            key = self.value(k)
            if key in seen:
                self.error(k, f"{what}: duplicate key {key!r}")
            seen.add(key)
            out.append((str(key), k, v))
        return out

    def sequence(self, node, what: str) -> list | None:
        if not isinstance(node, yaml.SequenceNode):
            self.error(node, f"{what} must be a list")
            return None
        return node.value

    def number(self, node, field: str, where: str, kind: str, lo, hi, lo_incl: bool):
        raw = self.value(node)
        if isinstance(raw, str):
            # YAML 1.1 reads exponent forms like 1.0e6 as strings
            try:
                raw = float(raw)
            except ValueError:
                pass
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.error(node, f"{where}: field {field} must be a number, got {raw!r}")
            return None
        if kind == "count" and (raw != int(raw) if math.isfinite(raw) else True):
            self.error(node, f"{where}: field {field} must be an integer, got {raw!r}")
            return None
        value = float(raw) if kind != "count" else int(raw)
        low_ok = value >= lo if lo_incl else value > lo
        if not low_ok or value > hi or math.isnan(value):
            bracket = "[" if lo_incl else "("
            upper = "inf)" if hi == math.inf else f"{hi:g}]"
            self.error(node, f"{where}: field {field}={raw!r} outside {bracket}{lo:g}, {upper}")
            return None
        return value

    def profile_fields(self, items, where: str, skip=()) -> dict:
        fields = {}
        for key, knode, vnode in items:
            if key in skip:
                continue
            if key not in _PROFILE_BOUNDS:
                self.error(knode, f"{where}: unknown field {key!r}")
                continue
            value = self.number(vnode, key, where, *_PROFILE_BOUNDS[key])
            if value is not None:
                fields[key] = value
        return fields


def parse_topology(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate a topology document; raises TopologyError."""
    reader = _Reader(source)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else "?"
        raise TopologyError([f"{source}:{line}: malformed document: {getattr(exc, 'problem', exc)}"]) from None
    if root is None:
        raise TopologyError([f"{source}:1: empty document"])
    sections = reader.mapping(root, "topology")
    if sections is None:
        raise TopologyError(reader.diagnostics)
    by_name = {}
    for key, knode, vnode in sections:
        if key not in _SECTIONS:
            reader.error(knode, f"unknown section {key!r}")
        by_name[key] = (knode, vnode)

    defaults = {}
    if "defaults" in by_name:
        items = reader.mapping(by_name["defaults"][1], "defaults")
        defaults = reader.profile_fields(items or [], "defaults")

    nodes: list = []
    if "nodes" not in by_name:
        reader.error(root, "missing section 'nodes'")
    else:
        for item in reader.sequence(by_name["nodes"][1], "nodes") or []:
            name = reader.value(item)
            if not isinstance(name, (str, int)) or isinstance(name, bool):
                reader.error(item, f"node name must be a string, got {name!r}")
                continue
            name = str(name)
            if name in nodes:
                reader.error(item, f"duplicate node {name!r}")
                continue
            nodes.append(name)

    topology = Topology(nodes)
    seen_links: set[frozenset] = set()
    link_nodes = reader.sequence(by_name["links"][1], "links") if "links" in by_name else []
    for item in link_nodes or []:
        items = reader.mapping(item, "link")
        if items is None:
            continue
        ends = {k: (reader.value(v), v) for k, _, v in items if k in ("a", "b")}
        if "a" not in ends or "b" not in ends:
            reader.error(item, "link needs both endpoints 'a' and 'b'")
            continue
        a, b = str(ends["a"][0]), str(ends["b"][0])
        where = f"link {a}-{b}"
        fields = {**defaults, **reader.profile_fields(items, where, skip=("a", "b"))}
        ok = True
        for end, (name, node) in ends.items():
            if str(name) not in nodes:
                reader.error(node, f"{where}: unknown node {name!r}")
                ok = False
        if a == b:
            reader.error(item, f"{where}: self-loop")
            ok = False
        key = frozenset((a, b))
        if ok and key in seen_links:
            reader.error(item, f"{where}: duplicate link")
            ok = False
        if ok:
            seen_links.add(key)
            topology.add_link(a, b, HardwareProfile(**fields))

    resource = None
    if "graph_resource" in by_name:
        resource = _parse_resource(reader, by_name["graph_resource"][1], nodes)

    if reader.diagnostics:
        raise TopologyError(reader.diagnostics)
    return Scenario(topology, resource)


def _parse_resource(reader: _Reader, node, nodes: list) -> GraphResource | None:
    items = reader.mapping(node, "graph_resource")
    if items is None:
        return None
    q_meas = 1.0
    edges = []
    seen: set[frozenset] = set()
    for key, knode, vnode in items:
        if key == "q_meas":
            q = reader.number(vnode, "q_meas", "graph_resource", "prob", 0.0, 1.0, False)
            q_meas = q if q is not None else q_meas
        elif key == "edges":
            for item in reader.sequence(vnode, "graph_resource.edges") or []:
                fields = reader.mapping(item, "graph_resource edge")
                if fields is None:
                    continue
                vals = {k: (reader.value(v), v) for k, _, v in fields}
                if "a" not in vals or "b" not in vals:
                    reader.error(item, "graph_resource edge needs both endpoints 'a' and 'b'")
                    continue
                a, b = str(vals["a"][0]), str(vals["b"][0])
                where = f"graph_resource edge {a}-{b}"
                for k, knode2, _ in fields:
                    if k not in ("a", "b", "factor"):
                        reader.error(knode2, f"{where}: unknown field {k!r}")
                factor = 1.0
                if "factor" in vals:
                    factor = reader.number(vals["factor"][1], "factor", where, "prob", 0.0, 1.0, True)
                bad = False
                for end in ("a", "b"):
                    if str(vals[end][0]) not in nodes:
                        reader.error(vals[end][1], f"{where}: unknown node {vals[end][0]!r}")
                        bad = True
                if a == b:
                    reader.error(item, f"{where}: self-loop")
                    bad = True
                if not bad and frozenset((a, b)) in seen:
                    reader.error(item, f"{where}: duplicate edge")
                    bad = True
                if not bad and factor is not None:
                    seen.add(frozenset((a, b)))
                    edges.append((a, b, factor))
        else:
            reader.error(knode, f"graph_resource: unknown field {key!r}")
    if reader.diagnostics:
        return None
    return GraphResource.from_edges(nodes, edges, q_meas)


def load_topology(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_topology(text, source=str(path))
