# Timing on a production-scale network: 432 failures, 1098 edges,
# max fan-in 32, a dozen process steps. Shows why parent aggregation
# matters and what one interactive query costs.

import time
import warnings

import numpy as np

from faultnet import Evidence, compile_network, insert_aggregation, likelihood_weighting
from faultnet.compiler import _noisy_or_cpt  # row-count illustration only
from faultnet.synthetic import forward_sample, production_scale_network

net = production_scale_network()
fan_in = {}
for e in net.edges:
    fan_in[e.effect_id] = fan_in.get(e.effect_id, 0) + 1
widest = max(fan_in.values())
print(f"{len(net.nodes)} failures, {len(net.edges)} edges, widest fan-in {widest}")

# A 32-parent noisy-OR table would hold 2^33 rows. Grouping parents five
# at a time divorces it into a tree of small tables.
from faultnet import CompiledNode
wide = CompiledNode(
    id="x", kind="failure", parents=tuple(f"p{i}" for i in range(9)),
    cpt=_noisy_or_cpt(list(np.linspace(0.1, 0.9, 9))))
nodes = insert_aggregation(wide, 3)
print(f"9-parent table: {wide.cpt.size} rows flat, "
      f"{sum(n.cpt.size for n in nodes)} rows after grouping by 3 "
      f"({len(nodes)} small tables)")

# The benchmark network deliberately leaves ~28% of the non-root
# failures over-explained, the way real expert ratings arrive. Compiling
# anyway clamps those leaks to zero and warns; collapse that to a count.
t0 = time.perf_counter()
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    compiled = compile_network(net, max_group_size=5)
t_compile = time.perf_counter() - t0
assert len(caught) == 1
print(f"\ncompile with aggregation: {t_compile:.2f}s, "
      f"{len(compiled.nodes)} compiled nodes, {len(compiled.clamped)} clamped leaks")

# One diagnosis query: observe three forward-sampled failures, ask for
# every posterior. 100k weighted samples is the interactive default.
rng = np.random.default_rng(2)
state = forward_sample(compiled, rng)
occurred = [fid for fid, bit in state.items() if bit and not fid.startswith(("leak:", "agg:"))]
evidence = Evidence({fid: "occurred" for fid in occurred[:3]})
print(f"evidence: {sorted(evidence.states)}")

t0 = time.perf_counter()
report = likelihood_weighting(compiled, evidence, n_samples=100_000, seed=55)
t_query = time.perf_counter() - t0
print(f"query: {t_query:.2f}s for {len(report.posteriors)} posteriors, "
      f"effective sample mass {report.effective_sample_mass:.0f}")

top = sorted(report.posteriors.items(), key=lambda kv: -kv[1])[:5]
print("top posteriors:")
for fid, p in top:
    print(f"  {fid}  {p:.4f} +/- {report.stderr[fid]:.4f}")

print(f"\ntotal: compile + query in {t_compile + t_query:.2f}s")

# Repair search cost: one GA generation over all 432 + 1098 parameters
# with the default population of 100.
from faultnet import GAConfig, recommend

t0 = time.perf_counter()
rec = recommend(net, GAConfig(population=100, generations=1, seed=0))
t_gen = time.perf_counter() - t0
print(f"one repair generation: {t_gen:.2f}s "
      f"(loss {rec.loss:.1f}, {rec.residual_inconsistencies} nodes still over-explained)")
