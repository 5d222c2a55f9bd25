"""Compilation of failure networks into leaky noisy-OR Bayesian networks.

Each failure with parents becomes a noisy-OR node: given parent states x_j and
per-parent trigger probabilities p_j, P(X=0 | x) = prod_j (1 - p_j)^{x_j}.
A leak node per non-root failure absorbs the probability mass the modelled
causes cannot explain, chosen so the node's marginal matches its expert prior.
Wide parent sets are divorced into a tree of aggregate nodes with pass-through
semantics so CPT storage stays bounded.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import FailureNetwork

__all__ = [
    "INCONSISTENCY_TOLERANCE",
    "CompiledNode",
    "CompiledNetwork",
    "LeakSolution",
    "noisy_or_row",
    "marginal_actives",
    "leak_probability",
    "solve_leaks",
    "insert_aggregation",
    "compile_network",
]

# Implied leaks below this are treated as genuine inconsistencies rather than
# float noise from the absence products.
INCONSISTENCY_TOLERANCE = 1e-12

# Without aggregation a CPT has 2^fan_in rows; refuse past this fan-in.
_MAX_UNGROUPED_PARENTS = 20

_KINDS = ("failure", "leak", "aggregate")


def noisy_or_row(active_triggers) -> float:
    """P(node occurs) given the triggers of its currently active parents.

    Empty input means no active parent, hence probability 0.
    """
    acc = 1.0
    for p in active_triggers:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"trigger probability outside [0, 1]: {p!r}")
        acc *= 1.0 - p
    return 1.0 - acc


def marginal_actives(
    network: FailureNetwork,
    priors: dict[str, float],
    triggers: dict[tuple[str, str], float] | None = None,
    leaks: dict[str, float] | None = None,
) -> dict[str, float]:
    """Factorized occurrence marginals in topological order.

    Roots take their prior. A non-root takes
    1 - (1 - leak) * prod_j (1 - p_j * m_j) over its parent marginals m_j,
    which treats parents as independent. With leaks omitted (all zero) this is
    the pre-leak marginal; the node's own prior does not enter.
    """
    triggers = triggers if triggers is not None else network.trigger_map()
    leaks = leaks or {}
    m: dict[str, float] = {}
    for nid in network.topological_order():
        edges = network.parent_edges(nid)
        if not edges:
            m[nid] = priors[nid]
            continue
        absent = 1.0
        for e in edges:
            absent *= 1.0 - triggers[(e.cause_id, e.effect_id)] * m[e.cause_id]
        m[nid] = 1.0 - (1.0 - leaks.get(nid, 0.0)) * absent
    return m


def leak_probability(prior_of_absence: float, parents: list[tuple[float, float]]) -> float:
    """Leak prior that lifts a noisy-OR node's absence marginal to the target.

    ``parents`` holds (marginal, trigger) pairs. The value is
    1 - prior_of_absence / prod_j (1 - p_j * m_j); a negative result signals
    an over-explained (inconsistent) node and is returned as-is.
    """
    if not 0.0 <= prior_of_absence <= 1.0:
        raise ValueError(f"prior_of_absence outside [0, 1]: {prior_of_absence!r}")
    absent = 1.0
    for m, p in parents:
        absent *= 1.0 - p * m
    if absent == 0.0:
        # Parents alone force the failure; only a zero absence target is consistent.
        return 0.0 if prior_of_absence == 0.0 else -math.inf
    return 1.0 - prior_of_absence / absent


@dataclass(frozen=True)
class LeakSolution:
    """Per-node leak solve over a whole network.

    marginals holds each node's occurrence marginal in the compiled (leaky,
    clamped) network: the prior where the implied leak is admissible, the
    pre-leak marginal where it had to be clamped to zero.
    """

    marginals: dict[str, float]
    pre_leak: dict[str, float]
    implied_leaks: dict[str, float]
    leaks: dict[str, float]
    inconsistent: tuple[str, ...]


def solve_leaks(
    network: FailureNetwork,
    priors: dict[str, float] | None = None,
    triggers: dict[tuple[str, str], float] | None = None,
) -> LeakSolution:
    """Solve every non-root leak in topological order.

    Parent marginals enter at their post-leak values, so the solved leaks are
    exactly the ones the compiled network needs for each consistent node's
    marginal to reproduce its prior (exact on independent-parent topologies).
    """
    priors = priors if priors is not None else network.default_priors()
    triggers = triggers if triggers is not None else network.trigger_map()
    marginals: dict[str, float] = {}
    pre_leak: dict[str, float] = {}
    implied: dict[str, float] = {}
    leaks: dict[str, float] = {}
    inconsistent: list[str] = []
    for nid in network.topological_order():
        edges = network.parent_edges(nid)
        if not edges:
            marginals[nid] = priors[nid]
            continue
        pairs = [(marginals[e.cause_id], triggers[(e.cause_id, e.effect_id)]) for e in edges]
        lam = leak_probability(1.0 - priors[nid], pairs)
        implied[nid] = lam
        pre = noisy_or_row([p * m for m, p in pairs])
        pre_leak[nid] = pre
        if lam < -INCONSISTENCY_TOLERANCE:
            inconsistent.append(nid)
            leaks[nid] = 0.0
            marginals[nid] = pre
        else:
            leaks[nid] = min(max(lam, 0.0), 1.0)
            marginals[nid] = priors[nid]
    return LeakSolution(
        marginals=marginals,
        pre_leak=pre_leak,
        implied_leaks=implied,
        leaks=leaks,
        inconsistent=tuple(inconsistent),
    )


@dataclass(frozen=True, eq=False)
class CompiledNode:
    """One node of the compiled Bayesian network.

    ``cpt`` has exactly 2^len(parents) occurrence probabilities, indexed by
    the little-endian binary encoding of the parent states (parents[0] is
    bit 0). Parentless nodes carry a single-row CPT equal to their prior.
    """

    id: str
    kind: str
    parents: tuple[str, ...]
    cpt: np.ndarray
    origin_id: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown node kind {self.kind!r}")
        cpt = np.asarray(self.cpt, dtype=float)
        if cpt.shape != (2 ** len(self.parents),):
            raise ValueError(
                f"node {self.id!r}: CPT must have {2 ** len(self.parents)} rows, got {cpt.shape}")
        if np.any(cpt < 0.0) or np.any(cpt > 1.0):
            raise ValueError(f"node {self.id!r}: CPT rows outside [0, 1]")
        object.__setattr__(self, "cpt", cpt)

    @property
    def prior(self) -> float | None:
        """Unconditional occurrence probability; defined for parentless nodes."""
        return float(self.cpt[0]) if not self.parents else None


@dataclass(frozen=True)
class CompiledNetwork:
    """Topologically ordered compiled network plus bookkeeping.

    ``index`` maps every original failure id to its compiled node id (the ids
    coincide; the map makes the contract explicit). ``clamped`` lists failures
    whose implied leak was negative and got clamped to zero.
    """

    nodes: tuple[CompiledNode, ...]
    index: dict[str, str]
    max_group_size: int | None
    clamped: tuple[str, ...] = ()

    def __post_init__(self):
        by_id: dict[str, CompiledNode] = {}
        seen_parents: set[str] = set()
        for node in self.nodes:
            if node.id in by_id:
                raise ValueError(f"duplicate compiled node id {node.id!r}")
            for p in node.parents:
                if p not in by_id:
                    raise ValueError(
                        f"node {node.id!r}: parent {p!r} missing or out of topological order")
                seen_parents.add(p)
            by_id[node.id] = node
        if self.max_group_size is not None:
            for node in self.nodes:
                if len(node.parents) > self.max_group_size:
                    raise ValueError(
                        f"node {node.id!r}: fan-in {len(node.parents)} exceeds "
                        f"group size {self.max_group_size}")
        object.__setattr__(self, "_by_id", by_id)
        children: dict[str, list[str]] = {nid: [] for nid in by_id}
        for node in self.nodes:
            for p in node.parents:
                children[p].append(node.id)
        object.__setattr__(self, "_children", children)

    def node(self, node_id: str) -> CompiledNode:
        return self._by_id[node_id]

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id

    def original_ids(self) -> list[str]:
        return [n.id for n in self.nodes if n.kind == "failure"]

    def children_of(self, node_id: str) -> list[str]:
        return list(self._children[node_id])

    def failure_ancestors(self, node_id: str) -> set[str]:
        """Original failures upstream of a failure, traversing aggregates."""
        return self._reach(node_id, lambda nid: self.node(nid).parents)

    def failure_descendants(self, node_id: str) -> set[str]:
        """Original failures downstream of a failure, traversing aggregates."""
        return self._reach(node_id, lambda nid: self._children[nid])

    def _reach(self, start: str, step) -> set[str]:
        if self.node(start).kind != "failure":
            raise ValueError(f"{start!r} is not an original failure")
        out: set[str] = set()
        frontier = list(step(start))
        seen = {start}
        while frontier:
            nid = frontier.pop()
            if nid in seen:
                continue
            seen.add(nid)
            node = self.node(nid)
            if node.kind == "failure":
                out.add(nid)
            if node.kind != "leak":
                frontier.extend(step(nid))
        return out

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "max_group_size": self.max_group_size,
            "clamped": list(self.clamped),
            "index": dict(self.index),
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind,
                    "parents": list(n.parents),
                    "cpt": [float(v) for v in n.cpt],
                    **({"origin_id": n.origin_id} if n.origin_id else {}),
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "CompiledNetwork":
        nodes = tuple(
            CompiledNode(
                id=raw["id"],
                kind=raw["kind"],
                parents=tuple(raw["parents"]),
                cpt=np.asarray(raw["cpt"], dtype=float),
                origin_id=raw.get("origin_id"),
            )
            for raw in payload["nodes"]
        )
        return cls(
            nodes=nodes,
            index=dict(payload["index"]),
            max_group_size=payload["max_group_size"],
            clamped=tuple(payload.get("clamped", ())),
        )


def _chunk(units: list, size: int) -> list[list]:
    return [units[i:i + size] for i in range(0, len(units), size)]


def _divorce(child_id: str, inputs: list[tuple[str, float]], max_group_size: int):
    """Reduce a wide input list to <= max_group_size via aggregate layers.

    Each input is (node id, trigger). Groups of two or more become an
    aggregate with the member triggers on its incoming edges and a trigger of
    1.0 onward; singleton groups pass through unchanged, which keeps the tree
    greedy and deterministic over the id-sorted input order.
    """
    aggregates: list[CompiledNode] = []
    level = 0
    while len(inputs) > max_group_size:
        nxt: list[tuple[str, float]] = []
        for i, group in enumerate(_chunk(inputs, max_group_size)):
            if len(group) == 1:
                nxt.append(group[0])
                continue
            agg_id = f"agg:{child_id}:{level}:{i}"
            triggers = [t for _, t in group]
            aggregates.append(CompiledNode(
                id=agg_id,
                kind="aggregate",
                parents=tuple(nid for nid, _ in group),
                cpt=_noisy_or_cpt(triggers),
                origin_id=child_id,
            ))
            nxt.append((agg_id, 1.0))
        inputs = nxt
        level += 1
    return inputs, aggregates


def _noisy_or_cpt(triggers: list[float]) -> np.ndarray:
    """Full noisy-OR CPT over the given parent triggers, little-endian rows."""
    n = len(triggers)
    absent = np.ones(2 ** n)
    for j, p in enumerate(triggers):
        bit = (np.arange(2 ** n) >> j) & 1
        absent *= np.where(bit == 1, 1.0 - p, 1.0)
    return 1.0 - absent


def insert_aggregation(node: CompiledNode, max_group_size: int) -> list[CompiledNode]:
    """Divorce an over-wide node's parents into a tree of aggregates.

    Returns the new aggregate nodes followed by the rewritten node. Grouping
    is greedy over the existing parent order with the given maximum group
    size; the rewritten node keeps noisy-OR semantics over its new inputs, so
    the joint distribution over the original nodes is unchanged.
    """
    if max_group_size < 2:
        raise ValueError(f"max_group_size must be at least 2, got {max_group_size}")
    if len(node.parents) <= max_group_size:
        raise ValueError(
            f"node {node.id!r} has fan-in {len(node.parents)} <= {max_group_size}; "
            "nothing to aggregate")
    triggers = _triggers_from_cpt(node)
    inputs, aggregates = _divorce(node.id, list(zip(node.parents, triggers)), max_group_size)
    rewritten = CompiledNode(
        id=node.id,
        kind=node.kind,
        parents=tuple(nid for nid, _ in inputs),
        cpt=_noisy_or_cpt([t for _, t in inputs]),
        origin_id=node.origin_id,
    )
    return aggregates + [rewritten]


def _triggers_from_cpt(node: CompiledNode) -> list[float]:
    """Recover per-parent triggers of a noisy-OR node from single-active rows."""
    triggers = [float(node.cpt[1 << j]) for j in range(len(node.parents))]
    if len(node.parents) <= _MAX_UNGROUPED_PARENTS:
        expected = _noisy_or_cpt(triggers)
        if not np.allclose(node.cpt, expected, atol=1e-12):
            raise ValueError(f"node {node.id!r}: CPT is not noisy-OR, cannot aggregate")
    return triggers


def compile_network(
    network: FailureNetwork,
    *,
    max_group_size: int | None = 5,
    priors: dict[str, float] | None = None,
    triggers: dict[tuple[str, str], float] | None = None,
) -> CompiledNetwork:
    """Compile a failure network into a leaky noisy-OR Bayesian network.

    Every failure with at least one parent gets a leak node whose prior is the
    solved leak probability; inconsistent nodes get their leak clamped to zero
    and are reported in ``clamped`` plus a warning. Fan-ins above
    ``max_group_size`` (leak included) are divorced into aggregate trees;
    pass ``max_group_size=None`` to skip aggregation entirely.
    """
    if max_group_size is not None and max_group_size < 2:
        raise ValueError(f"max_group_size must be at least 2 or None, got {max_group_size}")
    priors = priors if priors is not None else network.default_priors()
    triggers = triggers if triggers is not None else network.trigger_map()
    solution = solve_leaks(network, priors, triggers)
    if solution.inconsistent:
        warnings.warn(
            "clamped negative leaks to 0 for inconsistent failures: "
            + ", ".join(solution.inconsistent),
            stacklevel=2,
        )

    compiled: list[CompiledNode] = []
    for nid in network.topological_order():
        edges = sorted(network.parent_edges(nid), key=lambda e: e.cause_id)
        if not edges:
            compiled.append(CompiledNode(
                id=nid, kind="failure", parents=(), cpt=np.array([priors[nid]])))
            continue
        leak_id = f"leak:{nid}"
        compiled.append(CompiledNode(
            id=leak_id, kind="leak", parents=(),
            cpt=np.array([solution.leaks[nid]]), origin_id=nid))
        inputs = [(e.cause_id, triggers[(e.cause_id, e.effect_id)]) for e in edges]
        inputs.append((leak_id, 1.0))
        if max_group_size is not None and len(inputs) > max_group_size:
            inputs, aggregates = _divorce(nid, inputs, max_group_size)
            compiled.extend(aggregates)
        elif len(inputs) > _MAX_UNGROUPED_PARENTS:
            raise ValueError(
                f"node {nid!r}: fan-in {len(inputs)} needs aggregation; "
                "pass a max_group_size")
        compiled.append(CompiledNode(
            id=nid,
            kind="failure",
            parents=tuple(pid for pid, _ in inputs),
            cpt=_noisy_or_cpt([t for _, t in inputs]),
        ))

    return CompiledNetwork(
        nodes=tuple(compiled),
        index={n.id: n.id for n in network.nodes},
        max_group_size=max_group_size,
        clamped=solution.inconsistent,
    )
