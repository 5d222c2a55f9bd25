import json

import pytest

from faultnet.cli import main

CONSISTENT_DOC = {
    "nodes": [
        {"id": "A", "name": "pump worn", "process_step": "supply", "occurrence_class": 8},
        {"id": "B", "name": "low pressure", "process_step": "supply", "occurrence_class": 7},
    ],
    "edges": [{"cause": "A", "effect": "B", "trigger_probability": 0.3}],
}

BROKEN_DOC = {
    "nodes": [
        {"id": "A", "name": "a", "process_step": "s", "occurrence_class": 10},
        {"id": "B", "name": "b", "process_step": "s", "occurrence_class": 1},
    ],
    "edges": [{"cause": "A", "effect": "B", "trigger_probability": 0.9}],
}


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "net.json").write_text(json.dumps(CONSISTENT_DOC))
    (tmp_path / "broken.json").write_text(json.dumps(BROKEN_DOC))
    return tmp_path


def _run(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def _ingest(capsys, workdir, filename):
    rc, out, _ = _run(capsys, "ingest", str(workdir / filename),
                      "--data-dir", str(workdir / "data"), "--json")
    assert rc == 0
    return json.loads(out)["network_id"]


def test_ingest_text_and_json(capsys, workdir):
    rc, out, _ = _run(capsys, "ingest", str(workdir / "net.json"),
                      "--data-dir", str(workdir / "data"))
    assert rc == 0
    assert "status=consistent" in out and "nodes=2" in out

    rc, out, _ = _run(capsys, "ingest", str(workdir / "broken.json"),
                      "--data-dir", str(workdir / "data"), "--json")
    assert rc == 0
    payload = json.loads(out)
    assert payload["status"] == "inconsistent"
    assert payload["inconsistency_count"] == 1


def test_ingest_invalid_document(capsys, workdir):
    (workdir / "bad.json").write_text(json.dumps({"nodes": [], "edges": [], "x": 1}))
    rc, _, err = _run(capsys, "ingest", str(workdir / "bad.json"),
                      "--data-dir", str(workdir / "data"))
    assert rc == 2
    assert "unknown top-level field 'x'" in err


def test_audit_lists_inconsistencies(capsys, workdir):
    nid = _ingest(capsys, workdir, "broken.json")
    rc, out, _ = _run(capsys, "audit", nid, "--data-dir", str(workdir / "data"))
    assert rc == 0
    assert "1 inconsistent failure(s)" in out
    assert "B:" in out and "implied_leak=" in out

    rc, _, err = _run(capsys, "audit", "nope", "--data-dir", str(workdir / "data"))
    assert rc == 4
    assert "unknown network" in err


def test_compile_gate_and_force(capsys, workdir):
    nid = _ingest(capsys, workdir, "broken.json")
    rc, _, err = _run(capsys, "compile", nid, "--data-dir", str(workdir / "data"))
    assert rc == 3
    assert "inconsistencies" in err

    rc, out, _ = _run(capsys, "compile", nid, "--data-dir", str(workdir / "data"), "--force")
    assert rc == 0
    assert "status=compiled" in out
    assert "warning: clamped" in out


def test_infer_end_to_end_across_invocations(capsys, workdir):
    # each CLI call builds a fresh service over the same event store
    nid = _ingest(capsys, workdir, "broken.json")
    rc, _, _ = _run(capsys, "compile", nid, "--data-dir", str(workdir / "data"), "--force")
    assert rc == 0

    rc, out, _ = _run(capsys, "infer", nid, "--data-dir", str(workdir / "data"),
                      "--evidence", "B=occurred", "--exact")
    assert rc == 0
    assert "candidate causes:" in out
    # leak:B is clamped to zero, so A is the only explanation left
    assert "A  1.0000" in out

    rc, out, _ = _run(capsys, "infer", nid, "--data-dir", str(workdir / "data"),
                      "--samples", "5000", "--json")
    assert rc == 0
    payload = json.loads(out)
    assert payload["n_samples"] == 5000
    assert set(payload["posteriors"]) == {"A", "B"}


def test_infer_error_paths(capsys, workdir):
    nid = _ingest(capsys, workdir, "net.json")
    rc, _, err = _run(capsys, "infer", "nope", "--data-dir", str(workdir / "data"))
    assert rc == 1 and "unknown network" in err

    rc, _, err = _run(capsys, "infer", nid, "--data-dir", str(workdir / "data"))
    assert rc == 1 and "not compiled" in err

    _run(capsys, "compile", nid, "--data-dir", str(workdir / "data"))
    rc, _, err = _run(capsys, "infer", nid, "--data-dir", str(workdir / "data"),
                      "--evidence", "A-occurred")
    assert rc == 1 and "FAILURE=occurred|absent" in err


def test_recommend_repairs_and_persists(capsys, workdir):
    nid = _ingest(capsys, workdir, "broken.json")
    rc, out, _ = _run(capsys, "recommend", nid, "--data-dir", str(workdir / "data"),
                      "--population", "30", "--generations", "80", "--json")
    assert rc == 0
    payload = json.loads(out)
    assert payload["status"] == "done"
    assert payload["result"]["residual_inconsistencies"] == 0
    assert payload["result"]["diff"]

    # the next CLI call sees the stored recommendation on the network
    rc, out, _ = _run(capsys, "audit", nid, "--data-dir", str(workdir / "data"), "--json")
    assert rc == 0
