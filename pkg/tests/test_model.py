import json
import math

import pytest
from hypothesis import given, strategies as st

from faultnet.model import (
    OCCURRENCE_CLASS_BOUNDS,
    CauseEffectEdge,
    FailureNetwork,
    FailureNode,
    NetworkValidationError,
    class_to_interval,
    parse_network,
    probability_to_class,
    representative_prior,
    serialize_network,
)


def _node(nid, occ=5, step="s1", **kw):
    return FailureNode(id=nid, name=f"failure {nid}", process_step=step,
                       occurrence_class=occ, **kw)


# -- occurrence classes -------------------------------------------------------

def test_class_bounds_partition_unit_interval():
    assert len(OCCURRENCE_CLASS_BOUNDS) == 10
    assert list(OCCURRENCE_CLASS_BOUNDS) == sorted(OCCURRENCE_CLASS_BOUNDS)
    assert OCCURRENCE_CLASS_BOUNDS[-1] == 1.0
    lowers = [class_to_interval(k)[0] for k in range(1, 11)]
    uppers = [class_to_interval(k)[1] for k in range(1, 11)]
    assert lowers[0] == 0.0
    # adjacent intervals share endpoints, no gaps and no overlap
    assert lowers[1:] == uppers[:-1]


@pytest.mark.parametrize("probability,expected", [
    (0.0, 1),
    (1e-6, 1),            # boundary belongs to the lower class
    (1.0000001e-6, 2),
    (50e-6, 2),
    (100e-6, 3),
    (1e-3, 4),
    (2e-3, 5),
    (3e-3, 6),
    (5e-3, 6),
    (10e-3, 7),
    (20e-3, 8),
    (50e-3, 9),
    (0.051, 10),
    (1.0, 10),
])
def test_probability_to_class_boundaries(probability, expected):
    assert probability_to_class(probability) == expected


@pytest.mark.parametrize("bad", [-0.1, 1.1, float("nan"), float("inf")])
def test_probability_to_class_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        probability_to_class(bad)


@pytest.mark.parametrize("bad", [0, 11, -3, 2.5, True])
def test_class_to_interval_rejects_bad_class(bad):
    with pytest.raises(ValueError):
        class_to_interval(bad)


def test_representative_prior_values():
    # geometric mean of the interval, lower endpoint floored at 1e-9
    assert representative_prior(5) == pytest.approx(1.4142135623730951e-3, rel=0, abs=1e-18)
    assert representative_prior(1) == pytest.approx(3.1622776601683795e-8, rel=0, abs=1e-22)
    assert representative_prior(10) == pytest.approx(math.sqrt(50e-3), rel=1e-15)


@pytest.mark.parametrize("k", range(1, 11))
def test_representative_prior_lies_in_its_class(k):
    rep = representative_prior(k)
    lower, upper = class_to_interval(k)
    assert lower < rep <= upper
    assert probability_to_class(rep) == k


@given(st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
def test_class_roundtrip_property(p):
    k = probability_to_class(p)
    lower, upper = class_to_interval(k)
    if k == 1:
        assert lower <= p <= upper
    else:
        assert lower < p <= upper


# -- network construction ------------------------------------------------------

def test_minimal_network_accessors():
    net = FailureNetwork(
        nodes=(_node("A", occ=3), _node("B", occ=5), _node("C", occ=6)),
        edges=(CauseEffectEdge("A", "B", 0.4), CauseEffectEdge("B", "C", 0.25)),
    )
    assert net.roots() == ["A"]
    assert net.topological_order() == ("A", "B", "C")
    assert [e.cause_id for e in net.parent_edges("C")] == ["B"]
    assert [e.effect_id for e in net.child_edges("A")] == ["B"]
    assert net.node("B").occurrence_class == 5
    assert "B" in net and "missing" not in net
    assert net.trigger_map() == {("A", "B"): 0.4, ("B", "C"): 0.25}
    priors = net.default_priors()
    assert priors["B"] == representative_prior(5)


def test_validation_collects_all_problems_at_once():
    with pytest.raises(NetworkValidationError) as exc:
        FailureNetwork(
            nodes=(_node("A"), _node("A"), _node("B", occ=0)),
            edges=(
                CauseEffectEdge("A", "B", 1.5),
                CauseEffectEdge("A", "B", 0.2),
                CauseEffectEdge("A", "ghost", 0.2),
                CauseEffectEdge("B", "B", 0.1),
            ),
            costs={"node:nope": 1.0, "node:A": -2.0},
        )
    text = "; ".join(exc.value.problems)
    assert "duplicate node id 'A'" in text
    assert "occurrence_class" in text
    assert "trigger_probability 1.5" in text
    assert "duplicate edge 'A' -> 'B'" in text
    assert "unknown node 'ghost'" in text
    assert "self-loop on node 'B'" in text
    assert "cost key 'node:nope'" in text
    assert "must be a positive number" in text
    assert len(exc.value.problems) >= 8


def test_cycle_error_names_the_cycle_nodes():
    with pytest.raises(NetworkValidationError) as exc:
        FailureNetwork(
            nodes=(_node("A"), _node("B"), _node("C")),
            edges=(
                CauseEffectEdge("A", "B", 0.1),
                CauseEffectEdge("B", "A", 0.1),
                CauseEffectEdge("A", "C", 0.1),
            ),
        )
    (problem,) = exc.value.problems
    assert problem == "cycle through nodes {A, B}"


def test_edge_cost_keys_accepted():
    net = FailureNetwork(
        nodes=(_node("A"), _node("B")),
        edges=(CauseEffectEdge("A", "B", 0.4),),
        costs={"node:A": 2.0, "edge:A->B": 0.5},
    )
    assert net.costs["edge:A->B"] == 0.5


def test_randomized_dags_validate_and_backedge_trips_cycle_check():
    import random
    rng = random.Random(42)
    for _ in range(20):
        n = rng.randint(3, 12)
        ids = [f"n{i}" for i in range(n)]
        order = ids[:]
        rng.shuffle(order)
        pos = {nid: i for i, nid in enumerate(order)}
        pairs = set()
        while len(pairs) < min(2 * n, n * (n - 1) // 2):
            a, b = rng.sample(ids, 2)
            if pos[a] > pos[b]:
                a, b = b, a
            pairs.add((a, b))
        nodes = tuple(_node(nid, occ=rng.randint(1, 10)) for nid in ids)
        edges = tuple(CauseEffectEdge(a, b, rng.random()) for a, b in sorted(pairs))
        net = FailureNetwork(nodes=nodes, edges=edges)
        topo_pos = {nid: i for i, nid in enumerate(net.topological_order())}
        assert all(topo_pos[e.cause_id] < topo_pos[e.effect_id] for e in net.edges)

        # reverse one edge to close a directed cycle
        victim = edges[0]
        back = CauseEffectEdge(victim.effect_id, victim.cause_id, 0.5)
        if (back.cause_id, back.effect_id) not in pairs:
            with pytest.raises(NetworkValidationError) as exc:
                FailureNetwork(nodes=nodes, edges=edges + (back,))
            assert any("cycle" in p for p in exc.value.problems)


# -- document parsing -----------------------------------------------------------

VALID_DOC = {
    "nodes": [
        {"id": "A", "name": "seal cracked", "process_step": "molding",
         "occurrence_class": 3, "severity": 7},
        {"id": "B", "name": "leak at fitting", "process_step": "assembly",
         "occurrence_class": 5, "detection_hint": "pressure test bench"},
    ],
    "edges": [
        {"cause": "A", "effect": "B", "trigger_probability": 0.4},
    ],
    "costs": {"node:A": 1.5},
}


def test_parse_serialize_roundtrip():
    net = parse_network(json.dumps(VALID_DOC))
    assert serialize_network(net) == VALID_DOC
    assert parse_network(serialize_network(net)) == net


def test_parse_accepts_dict_and_bytes():
    assert parse_network(VALID_DOC) == parse_network(json.dumps(VALID_DOC).encode())


def test_parse_rejects_unknown_fields_everywhere():
    doc = json.loads(json.dumps(VALID_DOC))
    doc["flavor"] = "spicy"
    doc["nodes"][0]["color"] = "red"
    doc["edges"][0]["weight"] = 3
    with pytest.raises(NetworkValidationError) as exc:
        parse_network(doc)
    text = "; ".join(exc.value.problems)
    assert "unknown top-level field 'flavor'" in text
    assert "unknown fields ['color']" in text
    assert "unknown fields ['weight']" in text


def test_parse_rejects_missing_fields_and_bad_types():
    with pytest.raises(NetworkValidationError) as exc:
        parse_network({
            "nodes": [{"id": "A", "name": "x"}, {"id": 7, "name": "y",
                       "process_step": "s", "occurrence_class": 2}],
            "edges": [{"cause": "A"}],
        })
    text = "; ".join(exc.value.problems)
    assert "missing fields" in text
    assert "must be strings" in text


def test_parse_rejects_non_json_and_non_object():
    with pytest.raises(NetworkValidationError):
        parse_network("{not json")
    with pytest.raises(NetworkValidationError):
        parse_network("[1, 2]")


def test_parse_graph_problems_surface_through_validation():
    doc = {
        "nodes": [
            {"id": "A", "name": "a", "process_step": "s", "occurrence_class": 2},
            {"id": "B", "name": "b", "process_step": "s", "occurrence_class": 2},
        ],
        "edges": [
            {"cause": "A", "effect": "B", "trigger_probability": 0.3},
            {"cause": "B", "effect": "A", "trigger_probability": 0.3},
        ],
    }
    with pytest.raises(NetworkValidationError) as exc:
        parse_network(doc)
    assert exc.value.problems == ["cycle through nodes {A, B}"]
