"""
Build a failure network by hand and compile it
===============================================

A failure network is a DAG of failure modes. Each node carries an
occurrence class (1..10, rarest to certain) and each edge a trigger
probability: how often the cause, having occurred, sets off the effect.
Compilation turns that into a leaky noisy-OR Bayesian network whose
marginals reproduce the expert's occurrence ratings.
"""

import json

from faultnet import (
    class_to_interval,
    compile_network,
    exact_posteriors,
    parse_network,
    representative_prior,
    serialize_network,
)

# A small solder-line example. Three root causes feed two intermediate
# failures which share a downstream effect.
doc = {
    "nodes": [
        {"id": "paste-too-cold", "name": "paste too cold", "occurrence_class": 5, "process_step": "print"},
        {"id": "stencil-clogged", "name": "stencil clogged", "occurrence_class": 4, "process_step": "print"},
        {"id": "nozzle-drift", "name": "nozzle drift", "occurrence_class": 5, "process_step": "place"},
        {"id": "insufficient-paste", "name": "insufficient paste", "occurrence_class": 6, "process_step": "print"},
        {"id": "tombstoning", "name": "tombstoning", "occurrence_class": 6, "process_step": "reflow"},
        {"id": "open-joint", "name": "open joint", "occurrence_class": 7, "process_step": "test"},
    ],
    "edges": [
        {"cause": "paste-too-cold", "effect": "insufficient-paste", "trigger_probability": 0.6},
        {"cause": "stencil-clogged", "effect": "insufficient-paste", "trigger_probability": 0.8},
        {"cause": "nozzle-drift", "effect": "tombstoning", "trigger_probability": 0.3},
        {"cause": "insufficient-paste", "effect": "tombstoning", "trigger_probability": 0.5},
        {"cause": "tombstoning", "effect": "open-joint", "trigger_probability": 0.9},
    ],
}

network = parse_network(doc)
print(f"parsed: {len(network.nodes)} failures, {len(network.edges)} cause-effect edges, roots {sorted(network.roots())}")

# Occurrence classes are intervals; a class maps back to a representative
# scalar prior (geometric mean of the interval, floored at 1e-9).
for k in (1, 5, 10):
    lo, hi = class_to_interval(k)
    print(f"class {k:2d} covers ({lo:g}, {hi:g}], representative prior {representative_prior(k):.4g}")

# Compile. Every non-root gets a leak node soaking up the probability mass
# its modelled causes do not explain, so the compiled marginal equals the
# expert's rated occurrence.
compiled = compile_network(network)
print()
print("compiled nodes:", len(compiled.nodes))
for node in compiled.nodes:
    if node.id.startswith("leak:"):
        print(f"  {node.id:28s} prior {node.prior:.6f}")

# Sanity: the compiled joint reproduces the expert marginals exactly.
# (Exactly as long as no node's causes depend on each other; the leak
# solver treats co-parents as independent, which holds in this network.)
posterior = exact_posteriors(compiled)
print()
print("marginal check (posterior vs rated prior):")
for node_id in network.topological_order():
    rated = representative_prior(network.node(node_id).occurrence_class)
    got = posterior.posteriors[node_id]
    print(f"  {node_id:20s} {got:.8f}  (rated {rated:.8f})")

# Documents round-trip through JSON unchanged.
assert parse_network(json.loads(json.dumps(serialize_network(network)))) is not None
print()
print("serialize/parse round-trip ok")
