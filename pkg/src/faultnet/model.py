"""Failure-network data model.

An expert-rated failure network is a directed acyclic graph of binary failure
events. Each node carries an occurrence rate class (1..10) mapping to a prior
probability interval; each edge carries the probability that the cause alone
triggers the effect. Networks are immutable after construction and safe to
share across threads.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass, field

__all__ = [
    "OCCURRENCE_CLASS_BOUNDS",
    "NetworkValidationError",
    "FailureNode",
    "CauseEffectEdge",
    "FailureNetwork",
    "class_to_interval",
    "probability_to_class",
    "representative_prior",
    "parse_network",
    "serialize_network",
]

# Upper bounds of the ten occurrence-class probability intervals. Class k
# covers (bounds[k-2], bounds[k-1]]; class 1 is closed at zero: [0, 1e-6].
OCCURRENCE_CLASS_BOUNDS: tuple[float, ...] = (
    1e-6,
    50e-6,
    100e-6,
    1e-3,
    2e-3,
    5e-3,
    10e-3,
    20e-3,
    50e-3,
    1.0,
)

# Floor for the geometric-mean representative prior of class 1 (lower bound 0).
_REPRESENTATIVE_FLOOR = 1e-9


class NetworkValidationError(ValueError):
    """Raised when a network document violates the schema or graph invariants.

    ``problems`` lists every issue found, each naming the offending node or
    edge identifiers.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def class_to_interval(occurrence_class: int) -> tuple[float, float]:
    """Return the (lower, upper] probability interval for a class 1..10."""
    if not isinstance(occurrence_class, int) or isinstance(occurrence_class, bool):
        raise ValueError(f"occurrence class must be an integer, got {occurrence_class!r}")
    if not 1 <= occurrence_class <= 10:
        raise ValueError(f"occurrence class out of range 1..10: {occurrence_class}")
    lower = 0.0 if occurrence_class == 1 else OCCURRENCE_CLASS_BOUNDS[occurrence_class - 2]
    return lower, OCCURRENCE_CLASS_BOUNDS[occurrence_class - 1]


def probability_to_class(probability: float) -> int:
    """Return the occurrence class whose interval contains ``probability``."""
    if not 0.0 <= probability <= 1.0 or math.isnan(probability):
        raise ValueError(f"probability outside [0, 1]: {probability!r}")
    # bisect_left lands on the first upper bound >= probability, so exact
    # boundary values fall into the lower class.
    return bisect_left(OCCURRENCE_CLASS_BOUNDS, probability) + 1


def representative_prior(occurrence_class: int) -> float:
    """Scalar prior for a class: geometric mean of its interval endpoints.

    The lower endpoint is floored at 1e-9 so class 1 (closed at zero) still
    yields a positive value. The result always lies inside the interval.
    """
    lower, upper = class_to_interval(occurrence_class)
    return math.sqrt(max(lower, _REPRESENTATIVE_FLOOR) * upper)


@dataclass(frozen=True)
class FailureNode:
    """One binary failure event of a production process step."""

    id: str
    name: str
    process_step: str
    occurrence_class: int
    severity: int | None = None
    detection_hint: str | None = None


@dataclass(frozen=True)
class CauseEffectEdge:
    """Directed cause-effect relation with the cause's solo trigger probability."""

    cause_id: str
    effect_id: str
    trigger_probability: float


@dataclass(frozen=True)
class FailureNetwork:
    """Validated, immutable failure network.

    Construction checks unique node ids, edge endpoint existence, duplicate
    edges, probability/class ranges, cost-map references, and acyclicity.
    """

    nodes: tuple[FailureNode, ...]
    edges: tuple[CauseEffectEdge, ...]
    costs: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        problems: list[str] = []
        seen: set[str] = set()
        for node in self.nodes:
            if node.id in seen:
                problems.append(f"duplicate node id {node.id!r}")
            seen.add(node.id)
            if not isinstance(node.occurrence_class, int) or isinstance(node.occurrence_class, bool) \
                    or not 1 <= node.occurrence_class <= 10:
                problems.append(
                    f"node {node.id!r}: occurrence_class {node.occurrence_class!r} outside 1..10")
            if node.severity is not None and (
                    not isinstance(node.severity, int) or isinstance(node.severity, bool)
                    or not 1 <= node.severity <= 10):
                problems.append(f"node {node.id!r}: severity {node.severity!r} outside 1..10")
            if not node.id:
                problems.append("empty node id")

        seen_edges: set[tuple[str, str]] = set()
        for edge in self.edges:
            pair = (edge.cause_id, edge.effect_id)
            if pair in seen_edges:
                problems.append(f"duplicate edge {edge.cause_id!r} -> {edge.effect_id!r}")
            seen_edges.add(pair)
            for endpoint in pair:
                if endpoint not in seen:
                    problems.append(
                        f"edge {edge.cause_id!r} -> {edge.effect_id!r}: unknown node {endpoint!r}")
            if not (isinstance(edge.trigger_probability, (int, float))
                    and not isinstance(edge.trigger_probability, bool)
                    and 0.0 <= edge.trigger_probability <= 1.0):
                problems.append(
                    f"edge {edge.cause_id!r} -> {edge.effect_id!r}: "
                    f"trigger_probability {edge.trigger_probability!r} outside [0, 1]")
            if edge.cause_id == edge.effect_id:
                problems.append(f"self-loop on node {edge.cause_id!r}")

        for key, value in self.costs.items():
            if not _cost_key_exists(key, seen, seen_edges):
                problems.append(f"cost key {key!r} references nothing in the network")
            if not (isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0):
                problems.append(f"cost {key!r}: value {value!r} must be a positive number")

        topo: tuple[str, ...] = ()
        if not problems:
            order, cycle = _topological_order(
                [n.id for n in self.nodes], [(e.cause_id, e.effect_id) for e in self.edges])
            if cycle:
                problems.append("cycle through nodes {" + ", ".join(sorted(cycle)) + "}")
            else:
                topo = tuple(order)

        if problems:
            raise NetworkValidationError(problems)
        object.__setattr__(self, "_topo_order", topo)
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})
        parents: dict[str, list[CauseEffectEdge]] = {n.id: [] for n in self.nodes}
        children: dict[str, list[CauseEffectEdge]] = {n.id: [] for n in self.nodes}
        for edge in self.edges:
            parents[edge.effect_id].append(edge)
            children[edge.cause_id].append(edge)
        object.__setattr__(self, "_parents", parents)
        object.__setattr__(self, "_children", children)

    # -- graph accessors -----------------------------------------------------

    def node(self, node_id: str) -> FailureNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"unknown node id {node_id!r}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id

    def parent_edges(self, node_id: str) -> list[CauseEffectEdge]:
        """Incoming cause-effect edges of a node."""
        return list(self._parents[node_id])

    def child_edges(self, node_id: str) -> list[CauseEffectEdge]:
        return list(self._children[node_id])

    def roots(self) -> list[str]:
        return [n.id for n in self.nodes if not self._parents[n.id]]

    def topological_order(self) -> tuple[str, ...]:
        """Node ids ordered so every cause precedes its effects."""
        return self._topo_order

    def default_priors(self) -> dict[str, float]:
        """Representative scalar prior per node, derived from its class."""
        return {n.id: representative_prior(n.occurrence_class) for n in self.nodes}

    def trigger_map(self) -> dict[tuple[str, str], float]:
        return {(e.cause_id, e.effect_id): e.trigger_probability for e in self.edges}


def _cost_key_exists(key: str, node_ids: set[str], edge_pairs: set[tuple[str, str]]) -> bool:
    if key.startswith("node:"):
        return key[5:] in node_ids
    if key.startswith("edge:"):
        body = key[5:]
        if "->" not in body:
            return False
        cause, effect = body.split("->", 1)
        return (cause, effect) in edge_pairs
    return False


def _topological_order(node_ids: list[str], edges: list[tuple[str, str]]):
    """Kahn's algorithm; on failure returns the node set of one actual cycle."""
    indeg = {nid: 0 for nid in node_ids}
    out: dict[str, list[str]] = {nid: [] for nid in node_ids}
    for cause, effect in edges:
        indeg[effect] += 1
        out[cause].append(effect)
    queue = sorted(nid for nid in node_ids if indeg[nid] == 0)
    order: list[str] = []
    while queue:
        nid = queue.pop(0)
        order.append(nid)
        for child in out[nid]:
            indeg[child] -= 1
            if indeg[child] == 0:
                queue.append(child)
        queue.sort()
    if len(order) == len(node_ids):
        return order, None
    return None, _find_cycle(out, {nid for nid in node_ids if indeg[nid] > 0})


def _find_cycle(out: dict[str, list[str]], candidates: set[str]) -> set[str]:
    # Iterative DFS restricted to nodes still carrying in-degree after Kahn.
    color: dict[str, int] = {}
    stack_path: list[str] = []

    def walk(start: str) -> set[str] | None:
        stack = [(start, iter(out[start]))]
        color[start] = 1
        stack_path.append(start)
        while stack:
            nid, it = stack[-1]
            advanced = False
            for child in it:
                if child not in candidates:
                    continue
                if color.get(child, 0) == 1:
                    return set(stack_path[stack_path.index(child):])
                if color.get(child, 0) == 0:
                    color[child] = 1
                    stack_path.append(child)
                    stack.append((child, iter(out[child])))
                    advanced = True
                    break
            if not advanced:
                color[nid] = 2
                stack_path.pop()
                stack.pop()
        return None

    for nid in sorted(candidates):
        if color.get(nid, 0) == 0:
            found = walk(nid)
            if found:
                return found
    return candidates  # unreachable for a genuine cycle, defensive


# -- document parsing ---------------------------------------------------------

_NODE_FIELDS = {"id", "name", "process_step", "occurrence_class", "severity", "detection_hint"}
_NODE_REQUIRED = {"id", "name", "process_step", "occurrence_class"}
_EDGE_FIELDS = {"cause", "effect", "trigger_probability"}
_TOP_FIELDS = {"nodes", "edges", "costs"}


def parse_network(document: str | bytes | dict) -> FailureNetwork:
    """Parse and validate a network document (JSON text or an already-loaded dict).

    Unknown fields are rejected at every level; all problems found are
    reported together in one NetworkValidationError.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise NetworkValidationError([f"document is not valid JSON: {exc}"]) from None
    if not isinstance(document, dict):
        raise NetworkValidationError(["document root must be an object"])

    problems: list[str] = []
    for key in document:
        if key not in _TOP_FIELDS:
            problems.append(f"unknown top-level field {key!r}")
    nodes_raw = document.get("nodes")
    edges_raw = document.get("edges")
    if not isinstance(nodes_raw, list):
        problems.append("'nodes' must be a list")
        nodes_raw = []
    if not isinstance(edges_raw, list):
        problems.append("'edges' must be a list")
        edges_raw = []

    nodes: list[FailureNode] = []
    for i, raw in enumerate(nodes_raw):
        if not isinstance(raw, dict):
            problems.append(f"nodes[{i}] must be an object")
            continue
        label = raw.get("id", f"#{i}")
        missing = _NODE_REQUIRED - raw.keys()
        if missing:
            problems.append(f"node {label!r}: missing fields {sorted(missing)}")
            continue
        unknown = raw.keys() - _NODE_FIELDS
        if unknown:
            problems.append(f"node {label!r}: unknown fields {sorted(unknown)}")
            continue
        if not isinstance(raw["id"], str) or not isinstance(raw["name"], str) \
                or not isinstance(raw["process_step"], str):
            problems.append(f"node {label!r}: id, name and process_step must be strings")
            continue
        hint = raw.get("detection_hint")
        if hint is not None and not isinstance(hint, str):
            problems.append(f"node {label!r}: detection_hint must be a string")
            continue
        nodes.append(FailureNode(
            id=raw["id"],
            name=raw["name"],
            process_step=raw["process_step"],
            occurrence_class=raw["occurrence_class"],
            severity=raw.get("severity"),
            detection_hint=hint,
        ))

    edges: list[CauseEffectEdge] = []
    for i, raw in enumerate(edges_raw):
        if not isinstance(raw, dict):
            problems.append(f"edges[{i}] must be an object")
            continue
        missing = _EDGE_FIELDS - raw.keys()
        unknown = raw.keys() - _EDGE_FIELDS
        if missing:
            problems.append(f"edges[{i}]: missing fields {sorted(missing)}")
            continue
        if unknown:
            problems.append(f"edges[{i}]: unknown fields {sorted(unknown)}")
            continue
        if not isinstance(raw["cause"], str) or not isinstance(raw["effect"], str):
            problems.append(f"edges[{i}]: cause and effect must be node id strings")
            continue
        edges.append(CauseEffectEdge(
            cause_id=raw["cause"],
            effect_id=raw["effect"],
            trigger_probability=raw["trigger_probability"],
        ))

    costs_raw = document.get("costs", {})
    if not isinstance(costs_raw, dict):
        problems.append("'costs' must be an object")
        costs_raw = {}

    if problems:
        raise NetworkValidationError(problems)
    return FailureNetwork(nodes=tuple(nodes), edges=tuple(edges), costs=dict(costs_raw))


def serialize_network(network: FailureNetwork) -> dict:
    """Inverse of parse_network; parse(serialize(n)) == n."""
    nodes = []
    for n in network.nodes:
        raw: dict = {
            "id": n.id,
            "name": n.name,
            "process_step": n.process_step,
            "occurrence_class": n.occurrence_class,
        }
        if n.severity is not None:
            raw["severity"] = n.severity
        if n.detection_hint is not None:
            raw["detection_hint"] = n.detection_hint
        nodes.append(raw)
    edges = [
        {"cause": e.cause_id, "effect": e.effect_id, "trigger_probability": e.trigger_probability}
        for e in network.edges
    ]
    doc: dict = {"nodes": nodes, "edges": edges}
    if network.costs:
        doc["costs"] = dict(network.costs)
    return doc
