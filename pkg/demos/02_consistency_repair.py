# Detecting and repairing over-explained failure ratings.
#
# An expert rates each failure's occurrence on the 1..10 class scale and
# each edge with a trigger probability. The two can contradict each other:
# if the causes alone already produce the effect more often than its rated
# class allows, no non-negative leak exists. detect_inconsistencies finds
# those nodes; recommend searches the cheapest parameter repair.

from faultnet import (
    GAConfig,
    ParameterVector,
    detect_inconsistencies,
    loss,
    parse_network,
    recommend,
)

doc = {
    "nodes": [
        {"id": "seal-worn", "name": "seal worn", "process_step": "assembly", "occurrence_class": 9},
        {"id": "pump-cavitating", "name": "pump cavitating", "process_step": "assembly", "occurrence_class": 8},
        # class 3 allows at most 1e-4, far below what the two causes produce
        {"id": "pressure-loss", "name": "pressure loss", "process_step": "test", "occurrence_class": 3},
        {"id": "line-stall", "name": "line stall", "process_step": "test", "occurrence_class": 9},
    ],
    "edges": [
        {"cause": "seal-worn", "effect": "pressure-loss", "trigger_probability": 0.7},
        {"cause": "pump-cavitating", "effect": "pressure-loss", "trigger_probability": 0.5},
        {"cause": "pressure-loss", "effect": "line-stall", "trigger_probability": 0.9},
    ],
}
network = parse_network(doc)

report = detect_inconsistencies(network)
print(f"{report.count} inconsistent node(s) out of {len(network.nodes)}")
for fid, prior, pre_leak, implied in report.items:
    print(f"  {fid}: rated prior {prior:.3g}, causes explain {pre_leak:.3g}, implied leak {implied:.3g}")

# The loss function scores any candidate parameter vector: alpha per
# remaining inconsistency plus the class-move / trigger-shift cost.
expert_cost = loss(network, ParameterVector.expert(network))
print(f"\nexpert parameters score {expert_cost} (alpha=4 per unresolved node)")

result = recommend(network, GAConfig(seed=11, generations=200))
print(f"\nGA ran {result.generations_run} generations, final loss {result.loss}")
print(f"residual inconsistencies: {result.residual_inconsistencies}")
print("changes vs expert:")
for row in result.diff:
    print(" ", row)

# The trace records one row per generation; repairs never raise a trigger
# above the expert's value.
worst_excess = max(r["max_trigger_excess"] for r in result.trace)
print(f"\nmax trigger excess across the whole run: {worst_excess}")
first, last = result.trace[0]["best_loss"], result.trace[-1]["best_loss"]
print(f"best loss went {first} -> {last}")
