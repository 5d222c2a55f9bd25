"""Root-cause-analysis service: pipeline state machine plus HTTP API.

The pipeline per network is ingest -> audit -> (recommend) -> compile ->
diagnose. Compilation is refused while the network is inconsistent unless
forced, in which case negative leaks are clamped and the warning recorded.
Diagnosis sessions hold evidence and a fixed inference seed; every posterior
is reproducible from the event log.
"""
import csv
import threading
import uuid
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import FailureNetwork, NetworkValidationError, parse_network
from .compiler import CompiledNetwork, compile_network
from .inference import Evidence, PosteriorReport, likelihood_weighting, rank_causes, rank_effects
from .consistency import GAConfig, Recommendation, detect_inconsistencies, recommend
from .store import EventStore

__all__ = ["ServiceConfig", "GateError", "RcaService", "create_app", "load_cell_lookup"]

_ACTIONS = ("confirm", "dismiss", "retract")


class GateError(RuntimeError):
    """A pipeline precondition is not met (wrong status for the operation)."""


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: str
    seed: int = 0
    samples: int = 100_000
    group_size: int = 5
    alpha: float = 4.0
    token: str | None = None
    cell_lookup: str | None = None
    job_workers: int = 2


@dataclass
class NetworkRecord:
    id: str
    document: dict
    network: FailureNetwork
    status: str  # unchecked | consistent | inconsistent | compiled
    inconsistencies: dict
    created_at: float
    updated_at: float
    compiled: CompiledNetwork | None = None
    compile_warnings: list[str] = field(default_factory=list)
    recommendation: dict | None = None

    def summary(self) -> dict:
        return {
            "network_id": self.id,
            "status": self.status,
            "node_count": len(self.network.nodes),
            "edge_count": len(self.network.edges),
            "inconsistency_count": self.inconsistencies["count"],
            "has_recommendation": self.recommendation is not None,
            "compiled": self.compiled is not None,
            "compile_warnings": list(self.compile_warnings),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


@dataclass
class DiagnosisSession:
    id: str
    network_id: str
    seed: int
    evidence: dict[str, str] = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)
    report: PosteriorReport | None = None  # cache, rebuilt on demand

    def summary(self) -> dict:
        return {
            "session_id": self.id,
            "network_id": self.network_id,
            "seed": self.seed,
            "evidence": dict(self.evidence),
            "history": list(self.history),
        }


def load_cell_lookup(path: str | Path) -> dict[str, list[tuple[str, str]]]:
    """Parse the cell lookup CSV: cell_id,failure_id,state per row.

    A header row is skipped if present. States must be occurred/absent.
    """
    table: dict[str, list[tuple[str, str]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or all(not c.strip() for c in row):
                continue
            if [c.strip().lower() for c in row[:3]] == ["cell_id", "failure_id", "state"]:
                continue
            if len(row) != 3:
                raise ValueError(f"cell lookup row must have 3 columns: {row!r}")
            cell, fid, state = (c.strip() for c in row)
            if state not in ("occurred", "absent"):
                raise ValueError(f"cell lookup state must be occurred/absent, got {state!r}")
            table.setdefault(cell, []).append((fid, state))
    return table


class RcaService:
    """In-process service core; the HTTP app and the CLI both drive this."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = EventStore(config.data_dir)
        self.networks: dict[str, NetworkRecord] = {}
        self.sessions: dict[str, DiagnosisSession] = {}
        self.jobs: dict[str, dict] = {}
        self._session_count = 0
        self._job_count = 0
        self._lock = threading.RLock()
        self._executor = ThreadPoolExecutor(max_workers=config.job_workers)
        self.cells = load_cell_lookup(config.cell_lookup) if config.cell_lookup else {}
        self._replay()

    # -- replay -----------------------------------------------------------------

    def _replay(self) -> None:
        for ev in self.store.replay("networks"):
            rec = self.networks.get(ev.get("network_id", ""))
            kind = ev["event"]
            if kind == "ingested":
                network = parse_network(ev["document"])
                report = detect_inconsistencies(network)
                self.networks[ev["network_id"]] = NetworkRecord(
                    id=ev["network_id"],
                    document=ev["document"],
                    network=network,
                    status="inconsistent" if report.count else "consistent",
                    inconsistencies=report.to_json(),
                    created_at=ev["ts"],
                    updated_at=ev["ts"],
                )
            elif rec is None:
                continue
            elif kind == "compiled":
                rec.compiled = CompiledNetwork.from_json(ev["compiled"])
                rec.compile_warnings = list(ev.get("warnings", []))
                rec.status = "compiled"
                rec.updated_at = ev["ts"]
            elif kind == "recommended":
                rec.recommendation = ev["recommendation"]
                rec.updated_at = ev["ts"]
        for ev in self.store.replay("sessions"):
            kind = ev["event"]
            if kind == "opened":
                self.sessions[ev["session_id"]] = DiagnosisSession(
                    id=ev["session_id"],
                    network_id=ev["network_id"],
                    seed=ev["seed"],
                )
                self._session_count += 1
            elif ev["session_id"] in self.sessions:
                ses = self.sessions[ev["session_id"]]
                if kind == "evidence":
                    self._mutate_evidence(ses, ev["failure_id"], ev["action"])
                    ses.history.append({
                        "ts": ev["ts"], "failure_id": ev["failure_id"],
                        "action": ev["action"], "via": ev.get("via", "api"),
                    })
                elif kind == "rerolled":
                    ses.seed = ev["seed"]
                ses.report = None
        for ev in self.store.replay("jobs"):
            kind = ev["event"]
            if kind == "created":
                self.jobs[ev["job_id"]] = {
                    "job_id": ev["job_id"], "network_id": ev["network_id"],
                    "status": "queued", "result": None, "error": None,
                }
                self._job_count += 1
            elif ev["job_id"] in self.jobs:
                job = self.jobs[ev["job_id"]]
                if kind == "started":
                    job["status"] = "running"
                elif kind == "finished":
                    job["status"] = "done"
                    job["result"] = ev["recommendation"]
                elif kind == "failed":
                    job["status"] = "failed"
                    job["error"] = ev["error"]
        # Jobs interrupted by a restart cannot resume; mark them failed.
        for job in self.jobs.values():
            if job["status"] in ("queued", "running"):
                job["status"] = "failed"
                job["error"] = "interrupted by service restart"

    # -- networks ----------------------------------------------------------------

    def ingest(self, document: dict) -> dict:
        network = parse_network(document)  # NetworkValidationError propagates
        report = detect_inconsistencies(network)
        network_id = uuid.uuid4().hex[:12]
        ev = self.store.append("networks", {
            "event": "ingested", "network_id": network_id, "document": document,
        })
        with self._lock:
            self.networks[network_id] = NetworkRecord(
                id=network_id,
                document=document,
                network=network,
                status="inconsistent" if report.count else "consistent",
                inconsistencies=report.to_json(),
                created_at=ev["ts"],
                updated_at=ev["ts"],
            )
        return self.networks[network_id].summary()

    def _record(self, network_id: str) -> NetworkRecord:
        try:
            return self.networks[network_id]
        except KeyError:
            raise KeyError(f"unknown network {network_id!r}") from None

    def network_summary(self, network_id: str) -> dict:
        return self._record(network_id).summary()

    def network_detail(self, network_id: str) -> dict:
        rec = self._record(network_id)
        out = rec.summary()
        out["document"] = rec.document
        return out

    def inconsistencies(self, network_id: str) -> dict:
        return dict(self._record(network_id).inconsistencies)

    def compile(self, network_id: str, *, force: bool = False,
                group_size: int | None = None) -> dict:
        rec = self._record(network_id)
        if rec.status == "inconsistent" and not force:
            raise GateError(
                f"network {network_id} has {rec.inconsistencies['count']} inconsistencies; "
                "pass force=true to compile with leaks clamped to 0")
        size = group_size if group_size is not None else self.config.group_size
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            compiled = compile_network(rec.network, max_group_size=size)
        warn_texts = [str(w.message) for w in caught]
        ev = self.store.append("networks", {
            "event": "compiled", "network_id": network_id,
            "compiled": compiled.to_json(), "warnings": warn_texts,
            "group_size": size,
        })
        with self._lock:
            rec.compiled = compiled
            rec.compile_warnings = warn_texts
            rec.status = "compiled"
            rec.updated_at = ev["ts"]
        return rec.summary()

    # -- recommendation jobs -------------------------------------------------------

    def start_recommendation(self, network_id: str, overrides: dict | None = None) -> dict:
        rec = self._record(network_id)
        with self._lock:
            self._job_count += 1
            job_id = f"job-{self._job_count:06d}-{uuid.uuid4().hex[:6]}"
            job_seed = int(np.random.SeedSequence(
                [self.config.seed, 0x4A0B, self._job_count]).generate_state(1)[0])
            cfg_fields = {"alpha": self.config.alpha, "seed": job_seed}
            cfg_fields.update(overrides or {})
            config = GAConfig(**cfg_fields)
            self.jobs[job_id] = {
                "job_id": job_id, "network_id": network_id,
                "status": "queued", "result": None, "error": None,
            }
        self.store.append("jobs", {
            "event": "created", "job_id": job_id, "network_id": network_id,
            "seed": config.seed,
        })
        self._executor.submit(self._run_job, job_id, rec, config)
        return {"job_id": job_id, "status": "queued"}

    def _run_job(self, job_id: str, rec: NetworkRecord, config: GAConfig) -> None:
        self.store.append("jobs", {"event": "started", "job_id": job_id})
        with self._lock:
            self.jobs[job_id]["status"] = "running"
        try:
            result: Recommendation = recommend(rec.network, config)
            payload = result.to_json()
        except Exception as exc:  # recorded, surfaced via job status
            self.store.append("jobs", {
                "event": "failed", "job_id": job_id, "error": str(exc)})
            with self._lock:
                self.jobs[job_id]["status"] = "failed"
                self.jobs[job_id]["error"] = str(exc)
            return
        self.store.append("jobs", {
            "event": "finished", "job_id": job_id, "recommendation": payload})
        ev = self.store.append("networks", {
            "event": "recommended", "network_id": rec.id, "recommendation": payload})
        with self._lock:
            self.jobs[job_id]["status"] = "done"
            self.jobs[job_id]["result"] = payload
            rec.recommendation = payload
            rec.updated_at = ev["ts"]

    def job_status(self, job_id: str) -> dict:
        try:
            return dict(self.jobs[job_id])
        except KeyError:
            raise KeyError(f"unknown job {job_id!r}") from None

    # -- sessions -------------------------------------------------------------------

    def open_session(self, network_id: str) -> dict:
        rec = self._record(network_id)
        if rec.compiled is None:
            raise GateError(f"network {network_id} is not compiled; compile before diagnosis")
        with self._lock:
            self._session_count += 1
            seed = int(np.random.SeedSequence(
                [self.config.seed, 0x5E55, self._session_count]).generate_state(1)[0])
            session_id = f"ses-{self._session_count:06d}-{uuid.uuid4().hex[:6]}"
            self.sessions[session_id] = DiagnosisSession(
                id=session_id, network_id=network_id, seed=seed)
        self.store.append("sessions", {
            "event": "opened", "session_id": session_id,
            "network_id": network_id, "seed": seed,
        })
        return self.sessions[session_id].summary()

    def _session(self, session_id: str) -> DiagnosisSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise KeyError(f"unknown session {session_id!r}") from None

    def session_summary(self, session_id: str) -> dict:
        return self._session(session_id).summary()

    @staticmethod
    def _mutate_evidence(ses: DiagnosisSession, failure_id: str, action: str) -> None:
        if action == "confirm":
            ses.evidence[failure_id] = "occurred"
        elif action == "dismiss":
            ses.evidence[failure_id] = "absent"
        elif action == "retract":
            if failure_id not in ses.evidence:
                raise ValueError(f"cannot retract {failure_id!r}: not in evidence")
            del ses.evidence[failure_id]
        else:
            raise ValueError(f"action must be one of {_ACTIONS}, got {action!r}")

    def apply_evidence(self, session_id: str, failure_id: str, action: str,
                       *, via: str = "api") -> dict:
        ses = self._session(session_id)
        rec = self._record(ses.network_id)
        if failure_id not in rec.network:
            raise KeyError(f"unknown failure {failure_id!r} in network {rec.id}")
        with self._lock:
            self._mutate_evidence(ses, failure_id, action)
            ev = self.store.append("sessions", {
                "event": "evidence", "session_id": session_id,
                "failure_id": failure_id, "action": action, "via": via,
            })
            ses.history.append({
                "ts": ev["ts"], "failure_id": failure_id, "action": action, "via": via,
            })
            ses.report = None
        return self.posteriors(session_id)

    def posteriors(self, session_id: str) -> dict:
        ses = self._session(session_id)
        rec = self._record(ses.network_id)
        with self._lock:
            if ses.report is None:
                ses.report = likelihood_weighting(
                    rec.compiled,
                    Evidence(dict(ses.evidence)),
                    n_samples=self.config.samples,
                    seed=ses.seed,
                )
            return ses.report.to_json()

    def rankings(self, session_id: str) -> dict:
        ses = self._session(session_id)
        rec = self._record(ses.network_id)
        self.posteriors(session_id)  # ensure cache
        evidence = Evidence(dict(ses.evidence))
        if not evidence.occurred_ids():
            raise GateError("no confirmed failure in evidence")
        causes = rank_causes(rec.compiled, evidence, ses.report)
        effects = rank_effects(rec.compiled, evidence, ses.report)
        report = ses.report
        return {
            "causes": [
                {"failure_id": fid, "posterior": p, "stderr": report.stderr.get(fid, 0.0)}
                for fid, p in causes
            ],
            "effects": [
                {"failure_id": fid, "posterior": p, "stderr": report.stderr.get(fid, 0.0)}
                for fid, p in effects
            ],
            "evidence": dict(ses.evidence),
            "seed": ses.seed,
        }

    def prefill(self, session_id: str, cell_id: str) -> dict:
        if cell_id not in self.cells:
            raise KeyError(f"unknown cell {cell_id!r}")
        out = None
        for fid, state in self.cells[cell_id]:
            action = "confirm" if state == "occurred" else "dismiss"
            out = self.apply_evidence(session_id, fid, action, via=f"prefill:{cell_id}")
        return out if out is not None else self.posteriors(session_id)

    def reroll(self, session_id: str) -> dict:
        """Draw a fresh inference seed for the session (sensitivity check)."""
        ses = self._session(session_id)
        with self._lock:
            self._session_count += 1
            seed = int(np.random.SeedSequence(
                [self.config.seed, 0x5E55, self._session_count]).generate_state(1)[0])
            ses.seed = seed
            ses.report = None
        self.store.append("sessions", {
            "event": "rerolled", "session_id": session_id, "seed": seed})
        return self.posteriors(session_id)

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)


# -- HTTP layer ---------------------------------------------------------------------


def create_app(service: RcaService):
    """FastAPI application exposing the service; optional static bearer token."""
    from fastapi import Depends, FastAPI, HTTPException, Request
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse
    from pydantic import BaseModel

    class EvidenceBody(BaseModel):
        failure_id: str
        action: str

    class SessionBody(BaseModel):
        network_id: str

    class CompileBody(BaseModel):
        force: bool = False
        group_size: int | None = None

    class PrefillBody(BaseModel):
        cell_id: str

    class RecommendBody(BaseModel):
        alpha: float | None = None
        population: int | None = None
        generations: int | None = None
        stagnation_limit: int | None = None
        seed: int | None = None

    async def check_token(request: Request):
        if service.config.token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {service.config.token}":
            raise HTTPException(status_code=401, detail="invalid or missing token")

    app = FastAPI(title="faultnet", dependencies=[Depends(check_token)])
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(NetworkValidationError)
    async def _invalid(request, exc: NetworkValidationError):
        return JSONResponse(status_code=422, content={"errors": exc.problems})

    @app.exception_handler(KeyError)
    async def _missing(request, exc: KeyError):
        return JSONResponse(status_code=404, content={"detail": str(exc.args[0])})

    @app.exception_handler(GateError)
    async def _gated(request, exc: GateError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _bad(request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.post("/networks", status_code=201)
    async def ingest(document: dict):
        return service.ingest(document)

    @app.get("/networks/{network_id}")
    async def network(network_id: str):
        return service.network_detail(network_id)

    @app.get("/networks/{network_id}/inconsistencies")
    async def inconsistencies(network_id: str):
        return service.inconsistencies(network_id)

    @app.post("/networks/{network_id}/recommendations", status_code=202)
    async def recommendations(network_id: str, body: RecommendBody | None = None):
        overrides = {k: v for k, v in (body.model_dump() if body else {}).items()
                     if v is not None}
        return service.start_recommendation(network_id, overrides)

    @app.get("/recommendations/{job_id}")
    async def job(job_id: str):
        return service.job_status(job_id)

    @app.post("/networks/{network_id}/compile")
    async def compile_(network_id: str, body: CompileBody | None = None):
        body = body or CompileBody()
        return service.compile(network_id, force=body.force, group_size=body.group_size)

    @app.post("/sessions", status_code=201)
    async def open_session(body: SessionBody):
        return service.open_session(body.network_id)

    @app.get("/sessions/{session_id}")
    async def session(session_id: str):
        return service.session_summary(session_id)

    @app.post("/sessions/{session_id}/evidence")
    async def evidence(session_id: str, body: EvidenceBody):
        return service.apply_evidence(session_id, body.failure_id, body.action)

    @app.get("/sessions/{session_id}/rankings")
    async def rankings(session_id: str):
        return service.rankings(session_id)

    @app.post("/sessions/{session_id}/prefill")
    async def prefill(session_id: str, body: PrefillBody):
        return service.prefill(session_id, body.cell_id)

    @app.post("/sessions/{session_id}/reroll")
    async def reroll(session_id: str):
        return service.reroll(session_id)

    @app.get("/sessions/{session_id}/posteriors")
    async def posteriors(session_id: str):
        return service.posteriors(session_id)

    return app
