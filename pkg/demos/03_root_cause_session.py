"""Walk a diagnosis session the way the HTTP service drives it.

RcaService is the engine behind the REST endpoints; everything below maps
one-to-one onto API calls (ingest -> POST /networks, confirm -> POST
/sessions/{id}/evidence, and so on). Running it in-process keeps the demo
self-contained.
"""

import tempfile

from faultnet import RcaService, ServiceConfig

doc = {
    "nodes": [
        {"id": "paste-too-cold", "name": "paste too cold", "process_step": "print", "occurrence_class": 5},
        {"id": "stencil-clogged", "name": "stencil clogged", "process_step": "print", "occurrence_class": 4},
        {"id": "nozzle-drift", "name": "nozzle drift", "process_step": "place", "occurrence_class": 5},
        {"id": "insufficient-paste", "name": "insufficient paste", "process_step": "print", "occurrence_class": 6},
        {"id": "tombstoning", "name": "tombstoning", "process_step": "reflow", "occurrence_class": 6},
        {"id": "open-joint", "name": "open joint", "process_step": "test", "occurrence_class": 7},
    ],
    "edges": [
        {"cause": "paste-too-cold", "effect": "insufficient-paste", "trigger_probability": 0.6},
        {"cause": "stencil-clogged", "effect": "insufficient-paste", "trigger_probability": 0.8},
        {"cause": "nozzle-drift", "effect": "tombstoning", "trigger_probability": 0.3},
        {"cause": "insufficient-paste", "effect": "tombstoning", "trigger_probability": 0.5},
        {"cause": "tombstoning", "effect": "open-joint", "trigger_probability": 0.9},
    ],
}

workdir = tempfile.mkdtemp(prefix="rca-demo-")
service = RcaService(ServiceConfig(data_dir=workdir, seed=3, samples=200_000))

summary = service.ingest(doc)
net_id = summary["network_id"]
print(f"ingested network {net_id}: status {summary['status']}")

service.compile(net_id)
session = service.open_session(net_id)
ses_id = session["session_id"]
print(f"opened session {ses_id} (sampling seed {session['seed']})")

# The test bench reports an open joint. Confirm it and rank the causes.
service.apply_evidence(ses_id, "open-joint", "confirm")
ranked = service.rankings(ses_id)
print("\nranked causes given open-joint occurred:")
for row in ranked["causes"]:
    bar = "#" * round(40 * row["posterior"])
    print(f"  {row['failure_id']:20s} {row['posterior']:.4f} +/- {row['stderr']:.4f} {bar}")

# Operator inspects the placement head: no drift. Dismiss and re-rank.
service.apply_evidence(ses_id, "nozzle-drift", "dismiss")
ranked = service.rankings(ses_id)
print("\nafter dismissing nozzle-drift:")
for row in ranked["causes"]:
    print(f"  {row['failure_id']:20s} {row['posterior']:.4f}")

# The dismissal was premature. Retract it; the ranking reverts.
service.apply_evidence(ses_id, "nozzle-drift", "retract")
print("\nevidence after retract:", service.session_summary(ses_id)["evidence"])

print("\nsession history:")
for entry in service.session_summary(ses_id)["history"]:
    print(f"  {entry['action']:8s} {entry['failure_id']} (via {entry['via']})")

service.shutdown()
