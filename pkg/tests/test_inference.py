import json
import math
import warnings

import numpy as np
import pytest

from faultnet.compiler import CompiledNetwork, CompiledNode, compile_network
from faultnet.inference import (
    Evidence,
    ImpossibleEvidenceError,
    PosteriorReport,
    exact_posteriors,
    likelihood_weighting,
    rank_causes,
    rank_effects,
)
from faultnet.model import CauseEffectEdge, FailureNetwork, FailureNode
from faultnet.synthetic import forward_sample, random_dag

from oracles import brute_force_posteriors


def _net(node_ids, edge_triples):
    return FailureNetwork(
        nodes=tuple(
            FailureNode(id=nid, name=nid, process_step="s1", occurrence_class=5)
            for nid in node_ids),
        edges=tuple(CauseEffectEdge(a, b, t) for a, b, t in edge_triples),
    )


def _compile_quiet(net, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return compile_network(net, **kw)


def _chain_certain():
    # leak solves to exactly zero, so the only route to B is through A
    net = _net(["A", "B"], [("A", "B", 0.4)])
    return compile_network(net, priors={"A": 0.5, "B": 0.2})


def _collider():
    net = _net(["A", "B", "C"], [("A", "C", 0.8), ("B", "C", 0.8)])
    return compile_network(net, priors={"A": 0.3, "B": 0.3, "C": 0.5})


# -- exact inference ---------------------------------------------------------------

def test_exact_matches_brute_force_on_random_networks():
    rng = np.random.default_rng(5)
    for _ in range(8):
        snet = random_dag(int(rng.integers(3, 7)), rng, max_fan_in=3)
        compiled = _compile_quiet(snet.network, max_group_size=None, priors=snet.priors)
        reference, _ = brute_force_posteriors(compiled)

        report = exact_posteriors(compiled, include_leaks=True)
        for fid, p in report.posteriors.items():
            assert p == pytest.approx(reference[fid], abs=1e-12)
        for lid, p in (report.leak_posteriors or {}).items():
            assert p == pytest.approx(reference[lid], abs=1e-12)

        # now with evidence drawn from a forward sample (always possible)
        sample = forward_sample(compiled, rng)
        picked = sorted(sample)[:2]
        ev = Evidence({f: "occurred" if sample[f] else "absent" for f in picked})
        reference_ev, _ = brute_force_posteriors(
            compiled, {f: sample[f] for f in picked})
        report = exact_posteriors(compiled, ev)
        for fid, p in report.posteriors.items():
            assert p == pytest.approx(reference_ev[fid], abs=1e-12)


def test_exact_report_shape():
    report = exact_posteriors(_chain_certain())
    assert set(report.posteriors) == {"A", "B"}
    assert report.n_samples == 0
    assert report.seed is None
    assert report.effective_sample_mass == 1.0
    assert report.stderr == {"A": 0.0, "B": 0.0}
    assert report.leak_posteriors is None
    assert report.posteriors["B"] == pytest.approx(0.2, abs=1e-12)


def test_exact_certain_cause_given_effect():
    report = exact_posteriors(_chain_certain(), Evidence({"B": "occurred"}))
    assert report.posteriors["A"] == pytest.approx(1.0, abs=1e-12)
    assert report.posteriors["B"] == 1.0


def test_exact_explaining_away():
    compiled = _collider()
    base = exact_posteriors(compiled, Evidence({"C": "occurred"}))
    shunted = exact_posteriors(
        compiled, Evidence({"C": "occurred", "A": "occurred"}))
    assert base.posteriors["B"] > compiled.node("B").prior  # confirmed effect raises cause
    assert shunted.posteriors["B"] < base.posteriors["B"]   # rival cause explains it away

    reference, _ = brute_force_posteriors(compiled, {"C": 1, "A": 1})
    assert shunted.posteriors["B"] == pytest.approx(reference["B"], abs=1e-12)


def test_exact_node_limit():
    nodes = tuple(
        CompiledNode(id=f"r{i:02d}", kind="failure", parents=(), cpt=np.array([0.5]))
        for i in range(26))
    big = CompiledNetwork(nodes=nodes, index={}, max_group_size=None)
    with pytest.raises(ValueError, match="exact enumeration limited"):
        exact_posteriors(big)


def test_exact_impossible_evidence():
    nodes = (
        CompiledNode(id="never", kind="failure", parents=(), cpt=np.array([0.0])),
    )
    net = CompiledNetwork(nodes=nodes, index={}, max_group_size=None)
    with pytest.raises(ImpossibleEvidenceError):
        exact_posteriors(net, Evidence({"never": "occurred"}))


# -- evidence ------------------------------------------------------------------------

def test_evidence_validation():
    compiled = _compile_quiet(
        _net([f"p{i}" for i in range(7)] + ["hub"],
             [(f"p{i}", "hub", 0.3) for i in range(7)]),
        max_group_size=3)
    agg_ids = [n.id for n in compiled.nodes if n.kind == "aggregate"]
    assert agg_ids  # the fixture really is aggregated

    with pytest.raises(ValueError, match="state must be one of"):
        Evidence({"hub": "maybe"})
    with pytest.raises(KeyError, match="unknown failure"):
        Evidence({"ghost": "occurred"}).validate(compiled)
    with pytest.raises(ValueError, match="not allowed"):
        Evidence({"leak:hub": "occurred"}).validate(compiled)
    with pytest.raises(ValueError, match="not allowed"):
        Evidence({agg_ids[0]: "absent"}).validate(compiled)

    ev = Evidence({"p0": "occurred", "hub": "absent"})
    ev.validate(compiled)
    assert ev.occurred_ids() == ["p0"]
    assert ev.as_bits() == {"p0": 1, "hub": 0}
    assert len(ev) == 2


# -- likelihood weighting --------------------------------------------------------------

def test_lw_deterministic_for_fixed_seed():
    compiled = _collider()
    ev = Evidence({"C": "occurred"})
    a = likelihood_weighting(compiled, ev, n_samples=25_000, seed=42)
    b = likelihood_weighting(compiled, ev, n_samples=25_000, seed=42)
    assert a == b  # bit-identical, including stderr and sample mass
    c = likelihood_weighting(compiled, ev, n_samples=25_000, seed=43)
    assert c.posteriors != a.posteriors


def test_lw_matches_exact_on_random_networks():
    rng = np.random.default_rng(17)
    worst = 0.0
    for k in range(3):
        snet = random_dag(8, rng, max_fan_in=3)
        compiled = _compile_quiet(snet.network, max_group_size=None, priors=snet.priors)
        sample = forward_sample(compiled, rng)
        picked = sorted(sample)[:2]
        ev = Evidence({f: "occurred" if sample[f] else "absent" for f in picked})
        exact = exact_posteriors(compiled, ev)
        approx = likelihood_weighting(compiled, ev, n_samples=40_000, seed=100 + k)
        for fid in exact.posteriors:
            worst = max(worst, abs(exact.posteriors[fid] - approx.posteriors[fid]))
    assert worst < 0.015


def test_lw_report_bookkeeping():
    compiled = _chain_certain()
    report = likelihood_weighting(compiled, n_samples=10_000, seed=9)
    assert report.n_samples == 10_000
    assert report.seed == 9
    # without evidence every weight is exactly 1
    assert report.effective_sample_mass == 10_000.0
    assert report.leak_posteriors is None
    with_ev = likelihood_weighting(
        compiled, Evidence({"B": "occurred"}), n_samples=10_000, seed=9)
    assert with_ev.effective_sample_mass < 10_000.0
    assert with_ev.posteriors["B"] == 1.0
    assert with_ev.stderr["B"] == 0.0
    assert with_ev.posteriors["A"] == pytest.approx(1.0, abs=1e-12)


def test_lw_stderr_is_calibrated():
    compiled = _chain_certain()
    report = likelihood_weighting(compiled, n_samples=10_000, seed=3)
    binomial = math.sqrt(0.25 / 10_000)
    assert binomial / 2 < report.stderr["A"] < binomial * 2
    assert abs(report.posteriors["A"] - 0.5) < 5 * report.stderr["A"]


def test_lw_impossible_evidence():
    nodes = (
        CompiledNode(id="never", kind="failure", parents=(), cpt=np.array([0.0])),
    )
    net = CompiledNetwork(nodes=nodes, index={}, max_group_size=None)
    with pytest.raises(ImpossibleEvidenceError):
        likelihood_weighting(net, Evidence({"never": "occurred"}), n_samples=500, seed=0)


def test_lw_input_validation():
    compiled = _chain_certain()
    with pytest.raises(ValueError, match="n_samples"):
        likelihood_weighting(compiled, n_samples=0)
    with pytest.raises(ValueError, match="batch_size"):
        likelihood_weighting(compiled, n_samples=10, batch_size=0)


def test_lw_on_aggregated_network_matches_flat_exact():
    net = _net([f"p{i}" for i in range(7)] + ["hub"],
               [(f"p{i}", "hub", 0.25 + 0.05 * i) for i in range(7)])
    priors = {f"p{i}": 0.1 + 0.05 * i for i in range(7)} | {"hub": 0.9}
    flat = compile_network(net, max_group_size=None, priors=priors)
    grouped = compile_network(net, max_group_size=3, priors=priors)
    assert any(n.kind == "aggregate" for n in grouped.nodes)

    ev = Evidence({"hub": "occurred"})
    exact = exact_posteriors(flat, ev)
    approx = likelihood_weighting(grouped, ev, n_samples=60_000, seed=7)
    assert set(approx.posteriors) == set(exact.posteriors)  # aggregates stay hidden
    for fid in exact.posteriors:
        assert approx.posteriors[fid] == pytest.approx(exact.posteriors[fid], abs=0.01)


# -- ranking -----------------------------------------------------------------------------

def test_rank_causes_orders_ancestors_by_posterior():
    net = _net(["A", "B", "C"], [("A", "B", 0.4), ("B", "C", 0.5)])
    compiled = compile_network(net, priors={"A": 0.5, "B": 0.3, "C": 0.25})
    ev = Evidence({"C": "occurred"})
    report = exact_posteriors(compiled, ev)
    ranked = rank_causes(compiled, ev, report)
    assert [fid for fid, _ in ranked] == sorted(
        ["A", "B"], key=lambda f: (-report.posteriors[f], f))
    assert all(p == report.posteriors[f] for f, p in ranked)


def test_rank_causes_breaks_ties_by_id():
    compiled = _collider()  # A and B are exactly symmetric
    ev = Evidence({"C": "occurred"})
    report = exact_posteriors(compiled, ev)
    ranked = rank_causes(compiled, ev, report)
    assert [fid for fid, _ in ranked] == ["A", "B"]
    assert ranked[0][1] == pytest.approx(ranked[1][1], abs=1e-12)


def test_rank_causes_excludes_evidence_nodes():
    compiled = _collider()
    ev = Evidence({"C": "occurred", "A": "absent"})
    report = exact_posteriors(compiled, ev)
    assert [fid for fid, _ in rank_causes(compiled, ev, report)] == ["B"]


def test_rank_requires_a_confirmed_failure():
    compiled = _collider()
    ev = Evidence({"C": "absent"})
    report = exact_posteriors(compiled, ev)
    with pytest.raises(ValueError, match="no confirmed failure"):
        rank_causes(compiled, ev, report)
    with pytest.raises(ValueError, match="no confirmed failure"):
        rank_effects(compiled, ev, report)


def test_rank_effects_mirrors_causes():
    net = _net(["A", "B", "C"], [("A", "B", 0.4), ("B", "C", 0.5)])
    compiled = compile_network(net, priors={"A": 0.5, "B": 0.3, "C": 0.25})
    ev = Evidence({"A": "occurred"})
    report = exact_posteriors(compiled, ev)
    ranked = rank_effects(compiled, ev, report)
    assert {fid for fid, _ in ranked} == {"B", "C"}
    posteriors = [p for _, p in ranked]
    assert posteriors == sorted(posteriors, reverse=True)


def test_rank_traverses_aggregates():
    net = _net([f"p{i}" for i in range(9)] + ["hub"],
               [(f"p{i}", "hub", 0.2) for i in range(9)])
    priors = {f"p{i}": 0.2 for i in range(9)} | {"hub": 0.5}
    compiled = compile_network(net, max_group_size=3, priors=priors)
    ev = Evidence({"hub": "occurred"})
    report = likelihood_weighting(compiled, ev, n_samples=20_000, seed=1)
    ranked = rank_causes(compiled, ev, report)
    assert {fid for fid, _ in ranked} == {f"p{i}" for i in range(9)}


# -- report serialization ------------------------------------------------------------------

def test_posterior_report_json_roundtrip():
    compiled = _collider()
    report = likelihood_weighting(
        compiled, Evidence({"C": "occurred"}), n_samples=5_000, seed=11,
        include_leaks=True)
    assert report.leak_posteriors and "leak:C" in report.leak_posteriors
    payload = json.loads(json.dumps(report.to_json()))
    loaded = PosteriorReport.from_json(payload)
    assert loaded == report

    exact = exact_posteriors(compiled)
    assert PosteriorReport.from_json(json.loads(json.dumps(exact.to_json()))) == exact
