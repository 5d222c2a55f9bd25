"""Consistency auditing and genetic repair of expert parameters.

A failure is inconsistent when its causes alone already explain more
occurrence probability than its expert prior admits (negative implied leak).
The optimizer searches nearby parameter vectors that remove inconsistencies
while staying close to the expert ratings, measured in occurrence-class steps
for priors and raw deltas for triggers, weighted by elicitation costs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    OCCURRENCE_CLASS_BOUNDS,
    FailureNetwork,
    class_to_interval,
    probability_to_class,
    representative_prior,
)
from .compiler import INCONSISTENCY_TOLERANCE, solve_leaks

__all__ = [
    "DEFAULT_PRIOR_COST",
    "DEFAULT_TRIGGER_COST",
    "ParameterVector",
    "InconsistencyReport",
    "GAConfig",
    "Recommendation",
    "detect_inconsistencies",
    "loss",
    "recommend",
]

DEFAULT_PRIOR_COST = 1.0
DEFAULT_TRIGGER_COST = 10.0


@dataclass(frozen=True)
class ParameterVector:
    """Point estimate of every network parameter: node priors and edge triggers."""

    priors: dict[str, float]
    triggers: dict[tuple[str, str], float]

    @classmethod
    def expert(cls, network: FailureNetwork) -> "ParameterVector":
        """The vector the experts rated: representative priors, edge triggers."""
        return cls(priors=network.default_priors(), triggers=network.trigger_map())

    def to_json(self) -> dict:
        return {
            "priors": {k: float(v) for k, v in self.priors.items()},
            "triggers": {f"{c}->{e}": float(v) for (c, e), v in self.triggers.items()},
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ParameterVector":
        triggers = {}
        for key, v in payload["triggers"].items():
            cause, effect = key.split("->", 1)
            triggers[(cause, effect)] = float(v)
        return cls(priors={k: float(v) for k, v in payload["priors"].items()}, triggers=triggers)


@dataclass(frozen=True)
class InconsistencyReport:
    """Audit result: one row per over-explained failure.

    Each item is (failure id, prior P(X=1), pre-leak occurrence marginal,
    implied leak value).
    """

    items: tuple[tuple[str, float, float, float], ...]

    @property
    def count(self) -> int:
        return len(self.items)

    @property
    def failure_ids(self) -> tuple[str, ...]:
        return tuple(fid for fid, _, _, _ in self.items)

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "items": [
                {
                    "failure_id": fid,
                    "prior": prior,
                    "pre_leak_marginal": pre,
                    "implied_leak": lam,
                }
                for fid, prior, pre, lam in self.items
            ],
        }


def detect_inconsistencies(
    network: FailureNetwork,
    params: ParameterVector | None = None,
) -> InconsistencyReport:
    """Flag every failure whose implied leak is negative.

    Parent marginals propagate at their compiled (post-leak, clamped) values,
    so the flags coincide exactly with the leaks compile_network would clamp.
    """
    params = params or ParameterVector.expert(network)
    solution = solve_leaks(network, params.priors, params.triggers)
    items = tuple(
        (fid, params.priors[fid], solution.pre_leak[fid], solution.implied_leaks[fid])
        for fid in solution.inconsistent
    )
    return InconsistencyReport(items=items)


# -- loss ----------------------------------------------------------------------


class _GeneLayout:
    """Flat gene order over a network: sorted node priors, then sorted triggers."""

    def __init__(self, network: FailureNetwork, costs: dict[str, float] | None = None):
        self.network = network
        self.node_ids = sorted(n.id for n in network.nodes)
        self.edge_keys = sorted((e.cause_id, e.effect_id) for e in network.edges)
        self.n_priors = len(self.node_ids)
        self.n_genes = self.n_priors + len(self.edge_keys)
        self.prior_index = {nid: i for i, nid in enumerate(self.node_ids)}
        self.trigger_index = {
            key: self.n_priors + i for i, key in enumerate(self.edge_keys)}

        cost_map = dict(network.costs)
        if costs:
            cost_map.update(costs)
        cost = np.empty(self.n_genes)
        for nid, i in self.prior_index.items():
            cost[i] = cost_map.get(f"node:{nid}", DEFAULT_PRIOR_COST)
        for (c, e), i in self.trigger_index.items():
            cost[i] = cost_map.get(f"edge:{c}->{e}", DEFAULT_TRIGGER_COST)
        self.cost_normalized = cost / np.linalg.norm(cost)

        by_class = {n.id: n.occurrence_class for n in network.nodes}
        trig = network.trigger_map()
        self.expert_q = np.array(
            [float(by_class[nid]) for nid in self.node_ids]
            + [trig[key] for key in self.edge_keys])
        # Upper bound per gene: priors live in [0, 1], triggers never exceed
        # their expert value.
        self.caps = np.array([1.0] * self.n_priors + [trig[key] for key in self.edge_keys])
        self.is_prior = np.array([True] * self.n_priors + [False] * len(self.edge_keys))

        # Crossover bundles: a node's prior plus the triggers of its incoming edges.
        bundle_of_node = {nid: i for i, nid in enumerate(self.node_ids)}
        self.bundle = np.empty(self.n_genes, dtype=np.int64)
        for nid, i in self.prior_index.items():
            self.bundle[i] = bundle_of_node[nid]
        for (c, e), i in self.trigger_index.items():
            self.bundle[i] = bundle_of_node[e]
        self.n_bundles = len(self.node_ids)

        # Propagation structure in topological order.
        self.topo: list[tuple[int, list[tuple[int, int]]]] = []
        for nid in network.topological_order():
            pairs = [
                (self.trigger_index[(e.cause_id, e.effect_id)], self.prior_index[e.cause_id])
                for e in network.parent_edges(nid)
            ]
            self.topo.append((self.prior_index[nid], pairs))

        bounds = np.asarray(OCCURRENCE_CLASS_BOUNDS)
        self.class_lower = np.concatenate(([0.0], bounds[:-1]))
        self.class_upper = bounds

    def to_genes(self, params: ParameterVector) -> np.ndarray:
        genes = np.empty(self.n_genes)
        for nid, i in self.prior_index.items():
            genes[i] = params.priors[nid]
        for key, i in self.trigger_index.items():
            genes[i] = params.triggers[key]
        return genes

    def to_params(self, genes: np.ndarray) -> ParameterVector:
        return ParameterVector(
            priors={nid: float(genes[i]) for nid, i in self.prior_index.items()},
            triggers={key: float(genes[i]) for key, i in self.trigger_index.items()},
        )

    def quantize(self, pop: np.ndarray) -> np.ndarray:
        """q(p): priors to occurrence classes, triggers pass through."""
        q = pop.copy()
        cols = self.is_prior
        q[..., cols] = np.searchsorted(self.class_upper, pop[..., cols], side="left") + 1.0
        return q

    def count_inconsistencies(self, pop: np.ndarray) -> np.ndarray:
        """Vectorized inconsistency count per population row.

        Mirrors solve_leaks: marginals propagate at post-leak clamped values.
        """
        rows = pop.shape[0]
        # node marginals indexed by prior-gene position
        m = np.empty((rows, self.n_priors))
        counts = np.zeros(rows)
        for gi, pairs in self.topo:
            prior = pop[:, gi]
            if not pairs:
                m[:, gi] = prior
                continue
            absent = np.ones(rows)
            for tg, pg in pairs:
                absent = absent * (1.0 - pop[:, tg] * m[:, pg])
            with np.errstate(divide="ignore", invalid="ignore"):
                lam = 1.0 - (1.0 - prior) / absent
            lam = np.where(absent == 0.0, np.where(prior == 1.0, 0.0, -np.inf), lam)
            incon = lam < -INCONSISTENCY_TOLERANCE
            m[:, gi] = np.where(incon, 1.0 - absent, prior)
            counts += incon
        return counts

    def losses(self, pop: np.ndarray, alpha: float) -> np.ndarray:
        delta = (self.quantize(pop) - self.expert_q) * self.cost_normalized
        return (delta ** 2).sum(axis=1) + alpha * self.count_inconsistencies(pop)


def loss(
    network: FailureNetwork,
    params: ParameterVector,
    expert: ParameterVector | None = None,
    *,
    alpha: float = 4.0,
    costs: dict[str, float] | None = None,
) -> float:
    """Cost-weighted class distance to the expert vector plus alpha per inconsistency.

    With an explicit ``expert``, its priors are quantized to classes to form
    the reference; by default the network's own occurrence classes are used.
    """
    layout = _GeneLayout(network, costs)
    if expert is not None:
        layout.expert_q = layout.quantize(layout.to_genes(expert)[None, :])[0]
    return float(layout.losses(layout.to_genes(params)[None, :], alpha)[0])


# -- genetic repair --------------------------------------------------------------


@dataclass(frozen=True)
class GAConfig:
    """Knobs of the genetic repair; defaults follow the shipped configuration."""

    population: int = 100
    elitism: int = 2
    generations: int = 500
    stagnation_limit: int = 50
    base_mutation_rate: float = 0.1
    mutation_rate_cap: float = 0.5
    mutation_growth: float = 1.5
    crossover_rate: float = 0.8
    alpha: float = 4.0
    tournament_size: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population < 2 or self.elitism < 0 or self.elitism >= self.population:
            raise ValueError("population must exceed elitism and be at least 2")
        if self.generations < 1:
            raise ValueError("generations must be positive")


@dataclass(frozen=True)
class Recommendation:
    """Proposed repair: parameter vector, loss, diff vs expert, residual count.

    ``diff`` lists only parameters that actually changed: occurrence-class
    deltas for priors, raw deltas for triggers. ``trace`` carries one row per
    generation for auditability (best loss, mutation rate, trigger-cap slack).
    """

    params: ParameterVector
    loss: float
    residual_inconsistencies: int
    diff: tuple[dict, ...]
    generations_run: int
    trace: tuple[dict, ...] = field(repr=False, default=())

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "loss": self.loss,
            "residual_inconsistencies": self.residual_inconsistencies,
            "diff": [dict(d) for d in self.diff],
            "generations_run": self.generations_run,
            "trace": [dict(t) for t in self.trace],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Recommendation":
        return cls(
            params=ParameterVector.from_json(payload["params"]),
            loss=float(payload["loss"]),
            residual_inconsistencies=int(payload["residual_inconsistencies"]),
            diff=tuple(payload["diff"]),
            generations_run=int(payload["generations_run"]),
            trace=tuple(payload.get("trace", ())),
        )


def _mutate(pop: np.ndarray, layout: _GeneLayout, rate: float, rng: np.random.Generator) -> None:
    """In-place per-gene mutation.

    Prior genes shift uniformly within the width of their current class
    interval in both directions, clamped to [0, 1]. Trigger genes move
    downward only, by up to expert/10 per step, clamped to [0, expert]: a
    trigger can never grow past what the expert rated, and downward moves are
    the ones that relieve over-explained effects.
    """
    mask = rng.random(pop.shape) < rate
    if not mask.any():
        return
    span = np.empty(pop.shape)
    prior_cols = layout.is_prior
    cls = np.searchsorted(layout.class_upper, pop[:, prior_cols], side="left")
    span[:, prior_cols] = layout.class_upper[cls] - layout.class_lower[cls]
    span[:, ~prior_cols] = layout.caps[~prior_cols] / 10.0
    upper = np.where(prior_cols, 1.0, 0.0)
    shift = rng.uniform(-1.0, upper, pop.shape) * span
    pop += np.where(mask, shift, 0.0)
    np.clip(pop, 0.0, layout.caps, out=pop)


def _tournament(losses: np.ndarray, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    contenders = rng.integers(0, len(losses), size=(count, k))
    return contenders[np.arange(count), np.argmin(losses[contenders], axis=1)]


def _crossover_pair(a: np.ndarray, b: np.ndarray, layout: _GeneLayout, rng: np.random.Generator):
    # Uniform over bundles: a node's prior travels with its incoming triggers.
    take = rng.random(layout.n_bundles) < 0.5
    gene_take = take[layout.bundle]
    return np.where(gene_take, a, b), np.where(gene_take, b, a)


def recommend(
    network: FailureNetwork,
    config: GAConfig | None = None,
    *,
    costs: dict[str, float] | None = None,
) -> Recommendation:
    """Search a repair of the expert parameters by a genetic algorithm.

    The population starts at the expert vector plus perturbed copies, so an
    already-consistent network returns the expert vector itself at loss zero.
    """
    config = config or GAConfig()
    layout = _GeneLayout(network, costs)
    rng = np.random.default_rng(config.seed)

    expert_genes = layout.to_genes(ParameterVector.expert(network))
    pop = np.tile(expert_genes, (config.population, 1))
    _mutate(pop[1:], layout, config.base_mutation_rate, rng)
    losses = layout.losses(pop, config.alpha)

    best_i = int(np.argmin(losses))
    best_loss = float(losses[best_i])
    best_genes = pop[best_i].copy()
    rate = config.base_mutation_rate
    stagnant = 0
    trace: list[dict] = []
    generations_run = 0

    for gen in range(config.generations):
        generations_run = gen + 1
        order = np.argsort(losses, kind="stable")
        elites = pop[order[: config.elitism]].copy()
        n_children = config.population - config.elitism
        pair_count = (n_children + 1) // 2
        parents = _tournament(losses, config.tournament_size, 2 * pair_count, rng)
        children = np.empty((n_children, layout.n_genes))
        for p in range(pair_count):
            a, b = pop[parents[2 * p]], pop[parents[2 * p + 1]]
            if rng.random() < config.crossover_rate:
                x, y = _crossover_pair(a, b, layout, rng)
            else:
                x, y = a.copy(), b.copy()
            children[2 * p] = x
            if 2 * p + 1 < n_children:
                children[2 * p + 1] = y
        _mutate(children, layout, rate, rng)
        pop = np.vstack([elites, children])
        losses = layout.losses(pop, config.alpha)

        gen_best = float(losses.min())
        if gen_best < best_loss:
            best_loss = gen_best
            best_genes = pop[int(np.argmin(losses))].copy()
            rate = config.base_mutation_rate
            stagnant = 0
        else:
            stagnant += 1
            rate = min(rate * config.mutation_growth, config.mutation_rate_cap)
        trace.append({
            "generation": gen,
            "best_loss": best_loss,
            "mutation_rate": rate,
            "max_trigger_excess": float(
                (pop[:, ~layout.is_prior] - layout.caps[~layout.is_prior]).max())
            if (~layout.is_prior).any() else 0.0,
        })
        if stagnant >= config.stagnation_limit:
            break

    params = layout.to_params(best_genes)
    residual = detect_inconsistencies(network, params).count
    return Recommendation(
        params=params,
        loss=best_loss,
        residual_inconsistencies=residual,
        diff=tuple(_diff_rows(network, params)),
        generations_run=generations_run,
        trace=tuple(trace),
    )


def _diff_rows(network: FailureNetwork, params: ParameterVector):
    rows = []
    for node in sorted(network.nodes, key=lambda n: n.id):
        proposed_class = probability_to_class(params.priors[node.id])
        if proposed_class != node.occurrence_class:
            rows.append({
                "kind": "prior",
                "id": node.id,
                "expert_class": node.occurrence_class,
                "proposed_class": proposed_class,
                "class_delta": proposed_class - node.occurrence_class,
                "proposed_value": params.priors[node.id],
            })
    for (cause, effect), expert_value in sorted(network.trigger_map().items()):
        proposed = params.triggers[(cause, effect)]
        if abs(proposed - expert_value) > 1e-12:
            rows.append({
                "kind": "trigger",
                "cause": cause,
                "effect": effect,
                "expert_value": expert_value,
                "proposed_value": proposed,
                "delta": proposed - expert_value,
            })
    return rows
