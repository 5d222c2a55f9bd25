"""Posterior inference over compiled networks.

Two routes: exact enumeration of the full joint (small networks, used as the
reference) and likelihood weighting (the production path). Likelihood
weighting clamps evidence nodes, weights each sample by the conditional
probability of the clamped states, and is deterministic for a fixed seed via
per-batch sub-seeds.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compiler import CompiledNetwork

__all__ = [
    "EVIDENCE_STATES",
    "Evidence",
    "ImpossibleEvidenceError",
    "PosteriorReport",
    "exact_posteriors",
    "likelihood_weighting",
    "rank_causes",
    "rank_effects",
]

EVIDENCE_STATES = ("occurred", "absent")

_EXACT_NODE_LIMIT = 25
_DEFAULT_BATCH = 10_000


class ImpossibleEvidenceError(ValueError):
    """The evidence has probability zero (or no sampled mass) under the model."""


@dataclass(frozen=True)
class Evidence:
    """Observed failure states, keyed by original failure id."""

    states: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for fid, state in self.states.items():
            if state not in EVIDENCE_STATES:
                raise ValueError(
                    f"evidence for {fid!r}: state must be one of {EVIDENCE_STATES}, got {state!r}")

    def validate(self, network: CompiledNetwork) -> None:
        """Evidence may sit only on original failures, never leaks or aggregates."""
        for fid in self.states:
            if fid not in network:
                raise KeyError(f"evidence references unknown failure {fid!r}")
            if network.node(fid).kind != "failure":
                raise ValueError(f"evidence not allowed on {fid!r} (kind {network.node(fid).kind})")

    def occurred_ids(self) -> list[str]:
        return [fid for fid, s in self.states.items() if s == "occurred"]

    def as_bits(self) -> dict[str, int]:
        return {fid: 1 if s == "occurred" else 0 for fid, s in self.states.items()}

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class PosteriorReport:
    """Occurrence posteriors per original failure.

    ``effective_sample_mass`` is the weighted effective sample size
    (sum w)^2 / sum w^2; it equals n_samples when all weights agree and 1.0
    for exact reports. ``seed`` is None for exact reports.
    """

    posteriors: dict[str, float]
    stderr: dict[str, float]
    n_samples: int
    seed: int | None
    effective_sample_mass: float
    leak_posteriors: dict[str, float] | None = None

    def to_json(self) -> dict:
        payload = {
            "posteriors": {k: float(v) for k, v in self.posteriors.items()},
            "stderr": {k: float(v) for k, v in self.stderr.items()},
            "n_samples": self.n_samples,
            "seed": self.seed,
            "effective_sample_mass": float(self.effective_sample_mass),
        }
        if self.leak_posteriors is not None:
            payload["leak_posteriors"] = {k: float(v) for k, v in self.leak_posteriors.items()}
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "PosteriorReport":
        return cls(
            posteriors=dict(payload["posteriors"]),
            stderr=dict(payload["stderr"]),
            n_samples=payload["n_samples"],
            seed=payload["seed"],
            effective_sample_mass=payload["effective_sample_mass"],
            leak_posteriors=dict(payload["leak_posteriors"])
            if payload.get("leak_posteriors") is not None else None,
        )


def _factor(node_axis: int, parent_axes: list[int], cpt: np.ndarray, n: int) -> np.ndarray:
    """CPT as a broadcastable factor over the joint's axes.

    The CPT is little-endian over the parent list, so a Fortran-order reshape
    puts parents[0] on axis 0. Axes are then arranged to their joint positions.
    """
    j = len(parent_axes)
    table = cpt.reshape((2,) * j, order="F")
    stacked = np.stack([1.0 - table, table], axis=-1)  # axes: parents..., node
    positions = parent_axes + [node_axis]
    order = np.argsort(positions)
    arranged = np.transpose(stacked, axes=tuple(order))
    shape = [1] * n
    for pos in positions:
        shape[pos] = 2
    return arranged.reshape(shape)


def exact_posteriors(
    network: CompiledNetwork,
    evidence: Evidence | None = None,
    *,
    include_leaks: bool = False,
) -> PosteriorReport:
    """Posteriors by full joint enumeration. Guarded to <= 25 compiled nodes."""
    evidence = evidence or Evidence()
    evidence.validate(network)
    n = len(network.nodes)
    if n > _EXACT_NODE_LIMIT:
        raise ValueError(
            f"exact enumeration limited to {_EXACT_NODE_LIMIT} nodes, network has {n}")
    axis = {node.id: i for i, node in enumerate(network.nodes)}
    joint = np.ones((2,) * n)
    for node in network.nodes:
        joint = joint * _factor(axis[node.id], [axis[p] for p in node.parents], node.cpt, n)
    for fid, bit in evidence.as_bits().items():
        sel: list = [slice(None)] * n
        sel[axis[fid]] = 1 - bit
        joint[tuple(sel)] = 0.0
    total = float(joint.sum())
    if total <= 0.0:
        raise ImpossibleEvidenceError("evidence has probability zero under the model")

    posteriors: dict[str, float] = {}
    leak_posteriors: dict[str, float] = {}
    for node in network.nodes:
        if node.kind == "aggregate":
            continue
        p = float(joint.take(1, axis=axis[node.id]).sum() / total)
        if node.kind == "failure":
            posteriors[node.id] = p
        elif include_leaks:
            leak_posteriors[node.id] = p
    for fid, bit in evidence.as_bits().items():
        posteriors[fid] = float(bit)
    return PosteriorReport(
        posteriors=posteriors,
        stderr={fid: 0.0 for fid in posteriors},
        n_samples=0,
        seed=None,
        effective_sample_mass=1.0,
        leak_posteriors=leak_posteriors if include_leaks else None,
    )


def likelihood_weighting(
    network: CompiledNetwork,
    evidence: Evidence | None = None,
    *,
    n_samples: int = 100_000,
    seed: int = 0,
    batch_size: int = _DEFAULT_BATCH,
    include_leaks: bool = False,
) -> PosteriorReport:
    """Approximate posteriors by likelihood weighting.

    Evidence nodes are clamped and contribute their conditional probability to
    the sample weight; everything else is sampled in topological order from
    its CPT. Samples are drawn in batches whose sub-seeds derive from the
    master seed, so any batch-parallel evaluation matches the serial result.
    """
    evidence = evidence or Evidence()
    evidence.validate(network)
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")

    nodes = network.nodes
    n = len(nodes)
    pos = {node.id: i for i, node in enumerate(nodes)}
    parent_pos = [np.array([pos[p] for p in node.parents], dtype=np.int64) for node in nodes]
    pow2 = [1 << np.arange(len(node.parents), dtype=np.int64) for node in nodes]
    cpts = [node.cpt for node in nodes]
    ev_bits = evidence.as_bits()
    clamp = np.full(n, -1, dtype=np.int8)
    for fid, bit in ev_bits.items():
        clamp[pos[fid]] = bit

    total_w = 0.0
    total_w2 = 0.0
    active_w = np.zeros(n)
    active_w2 = np.zeros(n)

    n_batches = (n_samples + batch_size - 1) // batch_size
    children = np.random.SeedSequence(seed).spawn(n_batches)
    for b in range(n_batches):
        rng = np.random.default_rng(children[b])
        m = min(batch_size, n_samples - b * batch_size)
        states = np.zeros((m, n), dtype=np.int8)
        weights = np.ones(m)
        for i in range(n):
            if parent_pos[i].size:
                idx = states[:, parent_pos[i]].astype(np.int64) @ pow2[i]
                p = cpts[i][idx]
            else:
                p = np.full(m, cpts[i][0])
            if clamp[i] >= 0:
                states[:, i] = clamp[i]
                weights *= p if clamp[i] == 1 else 1.0 - p
            else:
                states[:, i] = rng.random(m) < p
        total_w += float(weights.sum())
        total_w2 += float((weights ** 2).sum())
        active = states == 1
        active_w += weights @ active
        active_w2 += (weights ** 2) @ active

    if total_w <= 0.0:
        raise ImpossibleEvidenceError(
            f"all {n_samples} samples carry zero weight; evidence is impossible "
            "or beyond sampling reach")

    posteriors: dict[str, float] = {}
    stderr: dict[str, float] = {}
    leak_posteriors: dict[str, float] = {}
    for i, node in enumerate(nodes):
        if node.kind == "aggregate":
            continue
        p_hat = float(active_w[i] / total_w)
        # Weighted-mean standard error: sqrt(sum w^2 (x - p)^2) / sum w.
        var_term = (1.0 - p_hat) ** 2 * float(active_w2[i]) + p_hat ** 2 * (total_w2 - float(active_w2[i]))
        se = float(np.sqrt(max(var_term, 0.0)) / total_w)
        if node.kind == "failure":
            posteriors[node.id] = p_hat
            stderr[node.id] = se
        elif include_leaks:
            leak_posteriors[node.id] = p_hat
    for fid, bit in ev_bits.items():
        posteriors[fid] = float(bit)
        stderr[fid] = 0.0

    return PosteriorReport(
        posteriors=posteriors,
        stderr=stderr,
        n_samples=n_samples,
        seed=seed,
        effective_sample_mass=total_w ** 2 / total_w2,
        leak_posteriors=leak_posteriors if include_leaks else None,
    )


def _ranked(
    network: CompiledNetwork,
    evidence: Evidence,
    report: PosteriorReport,
    related: set[str],
) -> list[tuple[str, float]]:
    rows = [
        (fid, report.posteriors[fid])
        for fid in related
        if fid not in evidence.states
    ]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


def rank_causes(
    network: CompiledNetwork,
    evidence: Evidence,
    report: PosteriorReport,
) -> list[tuple[str, float]]:
    """Candidate root causes: non-evidence ancestors of any confirmed failure,
    ordered by posterior descending, ties by id ascending."""
    confirmed = evidence.occurred_ids()
    if not confirmed:
        raise ValueError("no confirmed failure in evidence")
    related: set[str] = set()
    for fid in confirmed:
        related |= network.failure_ancestors(fid)
    return _ranked(network, evidence, report, related)


def rank_effects(
    network: CompiledNetwork,
    evidence: Evidence,
    report: PosteriorReport,
) -> list[tuple[str, float]]:
    """Failures at risk: non-evidence descendants of any confirmed failure."""
    confirmed = evidence.occurred_ids()
    if not confirmed:
        raise ValueError("no confirmed failure in evidence")
    related: set[str] = set()
    for fid in confirmed:
        related |= network.failure_descendants(fid)
    return _ranked(network, evidence, report, related)
