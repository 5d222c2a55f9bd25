"""Command-line interface mirroring the HTTP API."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .model import NetworkValidationError
from .service import GateError, RcaService, ServiceConfig, create_app
from .inference import Evidence, exact_posteriors, likelihood_weighting, rank_causes, rank_effects


def _service(args) -> RcaService:
    alpha = getattr(args, "alpha", None)
    return RcaService(ServiceConfig(
        data_dir=args.data_dir,
        seed=args.seed,
        samples=getattr(args, "samples", 100_000),
        group_size=getattr(args, "group_size", 5),
        alpha=4.0 if alpha is None else alpha,
        token=getattr(args, "token", None),
        cell_lookup=getattr(args, "cell_lookup", None),
    ))


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_ingest(args) -> int:
    service = _service(args)
    document = json.loads(Path(args.file).read_text(encoding="utf-8"))
    summary = service.ingest(document)
    _emit(args, summary,
          f"network {summary['network_id']}: status={summary['status']} "
          f"nodes={summary['node_count']} edges={summary['edge_count']} "
          f"inconsistencies={summary['inconsistency_count']}")
    return 0


def cmd_audit(args) -> int:
    service = _service(args)
    report = service.inconsistencies(args.network_id)
    lines = [f"{report['count']} inconsistent failure(s)"]
    for item in report["items"]:
        lines.append(
            f"  {item['failure_id']}: prior={item['prior']:.3g} "
            f"pre_leak={item['pre_leak_marginal']:.3g} "
            f"implied_leak={item['implied_leak']:.3g}")
    _emit(args, report, "\n".join(lines))
    return 0


def cmd_recommend(args) -> int:
    service = _service(args)
    overrides = {}
    for key in ("alpha", "population", "generations", "seed_ga"):
        value = getattr(args, key, None)
        if value is not None:
            overrides["seed" if key == "seed_ga" else key] = value
    job = service.start_recommendation(args.network_id, overrides)
    service.shutdown()  # wait for the job; the CLI call is synchronous
    status = service.job_status(job["job_id"])
    if status["status"] != "done":
        print(f"recommendation failed: {status['error']}", file=sys.stderr)
        return 1
    result = status["result"]
    lines = [
        f"loss={result['loss']:.4g} "
        f"residual_inconsistencies={result['residual_inconsistencies']} "
        f"generations={result['generations_run']}",
    ]
    for row in result["diff"]:
        if row["kind"] == "prior":
            lines.append(
                f"  prior {row['id']}: class {row['expert_class']} -> {row['proposed_class']}")
        else:
            lines.append(
                f"  trigger {row['cause']}->{row['effect']}: "
                f"{row['expert_value']:.3g} -> {row['proposed_value']:.3g}")
    _emit(args, status, "\n".join(lines))
    return 0


def cmd_compile(args) -> int:
    service = _service(args)
    summary = service.compile(args.network_id, force=args.force, group_size=args.group_size)
    text = f"network {args.network_id}: status={summary['status']}"
    for warning in summary["compile_warnings"]:
        text += f"\n  warning: {warning}"
    _emit(args, summary, text)
    return 0


def cmd_infer(args) -> int:
    service = _service(args)
    record = service.networks.get(args.network_id)
    if record is None:
        print(f"unknown network {args.network_id!r}", file=sys.stderr)
        return 1
    if record.compiled is None:
        print(f"network {args.network_id} is not compiled", file=sys.stderr)
        return 1
    states = {}
    for item in args.evidence or []:
        if "=" not in item:
            print(f"evidence must be FAILURE=occurred|absent, got {item!r}", file=sys.stderr)
            return 1
        fid, state = item.split("=", 1)
        states[fid] = state
    evidence = Evidence(states)
    if args.exact:
        report = exact_posteriors(record.compiled, evidence)
    else:
        report = likelihood_weighting(
            record.compiled, evidence, n_samples=args.samples, seed=args.seed)
    payload = report.to_json()
    lines = []
    if evidence.occurred_ids():
        causes = rank_causes(record.compiled, evidence, report)
        effects = rank_effects(record.compiled, evidence, report)
        payload["causes"] = [{"failure_id": f, "posterior": p} for f, p in causes]
        payload["effects"] = [{"failure_id": f, "posterior": p} for f, p in effects]
        lines.append("candidate causes:")
        lines += [f"  {fid}  {p:.4f}" for fid, p in causes[:20]]
        lines.append("failures at risk:")
        lines += [f"  {fid}  {p:.4f}" for fid, p in effects[:20]]
    else:
        lines.append("posteriors:")
        lines += [
            f"  {fid}  {p:.4f}"
            for fid, p in sorted(payload["posteriors"].items(), key=lambda kv: -kv[1])[:20]
        ]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    service = _service(args)
    app = create_app(service)
    if args.ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=args.ui_dir, html=True), name="ui")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="faultnet",
        description="Failure networks to leaky noisy-OR Bayesian networks for RCA")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--data-dir", required=True, help="event-store directory")
        p.add_argument("--seed", type=int, default=0, help="service master seed")
        p.add_argument("--json", action="store_true", help="machine-readable output")

    p = sub.add_parser("ingest", help="validate and store a network document")
    p.add_argument("file", help="network JSON file")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("audit", help="list inconsistent failures of a network")
    p.add_argument("network_id")
    common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("recommend", help="run the genetic repair and store the result")
    p.add_argument("network_id")
    common(p)
    p.add_argument("--alpha", type=float, default=None, help="inconsistency penalty weight")
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--seed-ga", dest="seed_ga", type=int, default=None,
                   help="GA seed (defaults to one derived from the master seed)")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("compile", help="compile a network into its Bayesian form")
    p.add_argument("network_id")
    common(p)
    p.add_argument("--group-size", type=int, default=5, help="max parents per node")
    p.add_argument("--force", action="store_true",
                   help="compile even if inconsistent (clamps leaks to 0)")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("infer", help="one-shot posterior query against a compiled network")
    p.add_argument("network_id")
    common(p)
    p.add_argument("--evidence", action="append", metavar="FAILURE=occurred|absent",
                   help="may be repeated")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--exact", action="store_true", help="exact enumeration (small networks)")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--samples", type=int, default=100_000, help="samples per posterior query")
    p.add_argument("--group-size", type=int, default=5)
    p.add_argument("--alpha", type=float, default=4.0)
    p.add_argument("--token", default=None, help="static bearer token; unset disables auth")
    p.add_argument("--cell-lookup", default=None, help="CSV of cell_id,failure_id,state")
    p.add_argument("--ui-dir", default=None, help="serve a built UI from this directory at /ui")
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NetworkValidationError as exc:
        for problem in exc.problems:
            print(f"invalid network: {problem}", file=sys.stderr)
        return 2
    except GateError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    except KeyError as exc:
        print(str(exc.args[0]) if exc.args else "not found", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
