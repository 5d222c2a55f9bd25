"""Synthetic failure-network generators.

Three families: polytree networks (every node's parents are mutually
independent, so the factorized leak solve is exact), moderate random DAGs for
sampler validation, and a production-scale benchmark network with realistic
shape statistics plus a small repair benchmark with injected inconsistencies.
All generators are deterministic for a given seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CauseEffectEdge,
    FailureNetwork,
    FailureNode,
    probability_to_class,
    representative_prior,
)
from .compiler import CompiledNetwork, solve_leaks
from .consistency import detect_inconsistencies

__all__ = [
    "SyntheticNet",
    "random_polytree",
    "random_dag",
    "production_scale_network",
    "repair_benchmark",
    "forward_sample",
]

BENCHMARK_FAILURES = 432
BENCHMARK_EDGES = 1098
BENCHMARK_ROOTS = 219
BENCHMARK_MAX_FAN_IN = 32
BENCHMARK_CROSS_SHARE = 0.37
_PROCESS_STEPS = 12


@dataclass(frozen=True)
class SyntheticNet:
    """A generated network plus the exact priors used to build it.

    The node occurrence classes are derived from the priors, but the float
    priors here are the authoritative compile inputs for oracle tests.
    """

    network: FailureNetwork
    priors: dict[str, float]


def _node(nid: str, prior: float, step: str = "S1") -> FailureNode:
    return FailureNode(
        id=nid,
        name=f"failure {nid}",
        process_step=step,
        occurrence_class=probability_to_class(min(prior, 1.0)),
    )


def random_polytree(
    n_nodes: int,
    rng: np.random.Generator,
    *,
    prior_range: tuple[float, float] = (0.05, 0.95),
    trigger_range: tuple[float, float] = (0.1, 0.9),
) -> SyntheticNet:
    """Random polytree: tree-shaped underneath, each edge randomly oriented.

    In a polytree any two parents of a node have disjoint ancestries, which
    makes them independent; this is the topology family on which the
    factorized leak solve is exact.
    """
    if n_nodes < 1:
        raise ValueError("need at least one node")
    ids = [f"n{i:02d}" for i in range(n_nodes)]
    priors = {nid: float(rng.uniform(*prior_range)) for nid in ids}
    edges = []
    for i in range(1, n_nodes):
        j = int(rng.integers(0, i))
        t = float(rng.uniform(*trigger_range))
        if rng.random() < 0.5:
            edges.append(CauseEffectEdge(ids[j], ids[i], t))
        else:
            edges.append(CauseEffectEdge(ids[i], ids[j], t))
    network = FailureNetwork(
        nodes=tuple(_node(nid, priors[nid]) for nid in ids),
        edges=tuple(edges),
    )
    return SyntheticNet(network=network, priors=priors)


def random_dag(
    n_nodes: int,
    rng: np.random.Generator,
    *,
    max_fan_in: int = 4,
    prior_range: tuple[float, float] = (0.05, 0.95),
    trigger_range: tuple[float, float] = (0.1, 0.9),
) -> SyntheticNet:
    """Random layered DAG with bounded fan-in; parents may share ancestors."""
    ids = [f"n{i:02d}" for i in range(n_nodes)]
    priors = {nid: float(rng.uniform(*prior_range)) for nid in ids}
    edges = []
    for i in range(1, n_nodes):
        k = int(rng.integers(0, min(max_fan_in, i) + 1))
        for j in rng.choice(i, size=k, replace=False):
            edges.append(CauseEffectEdge(ids[int(j)], ids[i], float(rng.uniform(*trigger_range))))
    network = FailureNetwork(
        nodes=tuple(_node(nid, priors[nid]) for nid in ids),
        edges=tuple(edges),
    )
    return SyntheticNet(network=network, priors=priors)


def _consistent_class(pre_leak: float, headroom: int = 1) -> int:
    """Smallest class (plus headroom) whose representative prior covers pre_leak."""
    c = probability_to_class(min(pre_leak, 1.0))
    while c < 10 and representative_prior(c) < pre_leak:
        c += 1
    return min(c + headroom, 10)


def production_scale_network(seed: int = 7) -> FailureNetwork:
    """Production-scale benchmark network.

    Shape statistics: 432 failures over 12 process steps, 219 roots, 1098
    cause-effect edges with a maximum fan-in of 32 and roughly 37% of edges
    crossing process steps. Most failures get occurrence classes consistent
    with what their causes explain; a realistic minority is left
    over-explained on purpose.
    """
    rng = np.random.default_rng(seed)
    n = BENCHMARK_FAILURES
    per_step = n // _PROCESS_STEPS
    ids = [f"F{i:03d}" for i in range(n)]
    step_of = {ids[i]: f"S{i // per_step + 1:02d}" for i in range(n)}

    non_roots = sorted(rng.choice(np.arange(1, n), size=n - BENCHMARK_ROOTS, replace=False))
    fan_in = {int(i): 1 for i in non_roots}
    hub = int(non_roots[len(non_roots) // 2])
    while hub < BENCHMARK_MAX_FAN_IN:  # hub needs enough predecessors
        hub = int(rng.choice(non_roots))
    fan_in[hub] = BENCHMARK_MAX_FAN_IN
    remaining = BENCHMARK_EDGES - sum(fan_in.values())
    pool = [int(i) for i in non_roots if i != hub]
    while remaining > 0:
        i = int(pool[rng.integers(0, len(pool))])
        if fan_in[i] < min(BENCHMARK_MAX_FAN_IN - 1, i):
            fan_in[i] += 1
            remaining -= 1

    edges: list[CauseEffectEdge] = []
    for i in non_roots:
        i = int(i)
        same = [j for j in range(i) if step_of[ids[j]] == step_of[ids[i]]]
        cross = [j for j in range(i) if step_of[ids[j]] != step_of[ids[i]]]
        chosen: set[int] = set()
        for _ in range(fan_in[i]):
            want_cross = rng.random() < BENCHMARK_CROSS_SHARE
            pools = (cross, same) if want_cross else (same, cross)
            pick = None
            for p in pools:
                avail = [j for j in p if j not in chosen]
                if avail:
                    pick = int(avail[rng.integers(0, len(avail))])
                    break
            if pick is None:
                break
            chosen.add(pick)
        lo, hi = (0.005, 0.05) if fan_in[i] > 8 else (0.02, 0.5)
        for j in sorted(chosen):
            edges.append(CauseEffectEdge(ids[j], ids[i], float(rng.uniform(lo, hi))))

    # Classes: roots rated directly, non-roots rated against what their causes
    # explain, with a sprinkle of over-explained failures left in.
    classes: dict[str, int] = {}
    marginals: dict[str, float] = {}
    parents: dict[str, list[CauseEffectEdge]] = {nid: [] for nid in ids}
    for e in edges:
        parents[e.effect_id].append(e)
    over_explained = {ids[int(i)] for i in rng.choice(
        non_roots, size=len(non_roots) * 121 // 213, replace=False)}
    for i in range(n):
        nid = ids[i]
        if not parents[nid]:
            classes[nid] = int(rng.integers(1, 9))
            marginals[nid] = representative_prior(classes[nid])
            continue
        absent = 1.0
        for e in parents[nid]:
            absent *= 1.0 - e.trigger_probability * marginals[e.cause_id]
        pre = 1.0 - absent
        if nid in over_explained:
            classes[nid] = max(1, probability_to_class(min(pre, 1.0)) - 2)
        else:
            classes[nid] = _consistent_class(pre)
        prior = representative_prior(classes[nid])
        marginals[nid] = prior if prior >= pre else pre

    nodes = tuple(
        FailureNode(
            id=nid,
            name=f"failure {nid}",
            process_step=step_of[nid],
            occurrence_class=classes[nid],
            severity=int(rng.integers(1, 11)),
        )
        for nid in ids
    )
    return FailureNetwork(nodes=nodes, edges=tuple(edges))


def repair_benchmark(seed: int, *, n_injected: int = 10) -> tuple[FailureNetwork, tuple[str, ...]]:
    """A 30-node, 60-edge network with exactly ``n_injected`` inconsistencies.

    Built consistent first (every class covers its pre-leak marginal with one
    class of headroom), then the chosen failures are down-rated to class 1,
    which their causes over-explain. Returns the network and the injected ids.
    """
    rng = np.random.default_rng(seed)
    n_roots, n_non = 10, 20
    ids = [f"n{i:02d}" for i in range(n_roots + n_non)]

    for _ in range(50):
        edges: list[CauseEffectEdge] = []
        for i in range(n_roots, n_roots + n_non):
            for j in rng.choice(i, size=3, replace=False):
                edges.append(CauseEffectEdge(ids[int(j)], ids[i], float(rng.uniform(0.05, 0.3))))
        classes: dict[str, int] = {}
        marginals: dict[str, float] = {}
        parents: dict[str, list[CauseEffectEdge]] = {nid: [] for nid in ids}
        for e in edges:
            parents[e.effect_id].append(e)
        for i, nid in enumerate(ids):
            if i < n_roots:
                classes[nid] = int(rng.integers(3, 9))
                marginals[nid] = representative_prior(classes[nid])
            else:
                absent = 1.0
                for e in parents[nid]:
                    absent *= 1.0 - e.trigger_probability * marginals[e.cause_id]
                classes[nid] = _consistent_class(1.0 - absent)
                marginals[nid] = representative_prior(classes[nid])

        injected = tuple(sorted(
            ids[int(i)] for i in rng.choice(
                np.arange(n_roots, n_roots + n_non), size=n_injected, replace=False)))
        for nid in injected:
            classes[nid] = 1
        network = FailureNetwork(
            nodes=tuple(
                FailureNode(id=nid, name=f"failure {nid}", process_step="S1",
                            occurrence_class=classes[nid])
                for nid in ids
            ),
            edges=tuple(edges),
        )
        report = detect_inconsistencies(network)
        if report.count == n_injected and set(report.failure_ids) == set(injected):
            return network, injected
    raise RuntimeError(f"could not seed exactly {n_injected} inconsistencies (seed {seed})")


def forward_sample(compiled: CompiledNetwork, rng: np.random.Generator) -> dict[str, int]:
    """Draw one joint state of all original failures by ancestral sampling."""
    state: dict[str, int] = {}
    for node in compiled.nodes:
        idx = 0
        for b, pid in enumerate(node.parents):
            idx |= state[pid] << b
        state[node.id] = int(rng.random() < node.cpt[idx])
    return {nid: state[nid] for nid in compiled.original_ids()}
