"""Operator commands: run a manifest, evaluate results, classify a report,
serve the review API.

Exit-code policy: per-study failures are data and never fail the process;
only operator errors (bad flags, unreadable manifest, port in use) exit 2.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import tempfile
from pathlib import Path

from .evaluate import tube_auc
from .pipeline import PipelineConfig, StudyResult
from .report_nlp import classify_report
from .store import Store, resolve_backend

METHOD_ALIASES = {
    "a": "a_full",
    "b": "b_patch",
    "c": "c_seg",
    "a_full": "a_full",
    "b_patch": "b_patch",
    "c_seg": "c_seg",
    "ens_ac": "ens_ac",
    "ens_abc": "ens_abc",
}


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 2


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return PipelineConfig.from_json(json.loads(Path(path).read_text()))


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _load_config(args.config)
    except (OSError, ValueError) as exc:
        return _fail(f"bad config: {exc}")
    data_dir = args.data_dir or tempfile.mkdtemp(prefix="ptxtriage-run-")
    with Store(data_dir) as store:
        try:
            summary = store.ingest_manifest(args.manifest)
        except OSError as exc:
            return _fail(str(exc))
        if summary.ingested == 0:
            return _fail(f"manifest {args.manifest} contains no valid studies")
        for lineno, reason in summary.rejected:
            print(f"rejected line {lineno}: {reason}", file=sys.stderr)
        try:
            backend = resolve_backend(args.backend, store, noise_eps=args.noise_eps)
        except ValueError as exc:
            return _fail(str(exc))
        batch = store.run_batch(backend, cfg, workers=args.workers)
        with open(args.out, "w", encoding="utf-8") as out:
            for state in sorted(store.studies(), key=lambda s: s.record.study_id):
                if state.result is None:
                    continue
                line = {
                    "result": state.result.to_json(),
                    "nlp": state.nlp.to_json() if state.nlp else None,
                    "triage": state.triage.to_json() if state.triage else None,
                }
                out.write(json.dumps(line) + "\n")
        print(json.dumps(batch.to_json()), file=sys.stderr)
    return 0


def _read_results(path: str) -> dict[str, StudyResult]:
    results: dict[str, StudyResult] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        result = StudyResult.from_json(d["result"] if "result" in d else d)
        results[result.study_id] = result
    return results


def _read_labels(path: str) -> dict[str, dict]:
    labels: dict[str, dict] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        d = json.loads(line)
        lab = d.get("labels") or {}
        if lab.get("pneumothorax") is None or lab.get("chest_tube") is None:
            continue
        labels[d["study_id"]] = {
            "ptx": bool(lab["pneumothorax"]),
            "tube": bool(lab["chest_tube"]),
            "tube_type": lab.get("tube_type"),
        }
    return labels


def cmd_eval(args: argparse.Namespace) -> int:
    from .evaluate import stratified_eval

    try:
        methods = [METHOD_ALIASES[m.strip()] for m in args.methods.split(",") if m.strip()]
    except KeyError as exc:
        return _fail(f"unknown method {exc.args[0]!r}; choose from {sorted(METHOD_ALIASES)}")
    if not methods:
        return _fail("no methods selected")
    try:
        results = _read_results(args.results)
        labels = _read_labels(args.manifest)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(f"cannot read inputs: {exc}")
    if not labels:
        return _fail(f"manifest {args.manifest} carries no pneumothorax/chest_tube labels")
    missing = sorted(sid for sid in labels if sid not in results)
    if missing:
        return _fail(f"results missing labeled studies: {', '.join(missing)}")
    ids = sorted(labels)
    aligned_results = [results[sid] for sid in ids]
    aligned_labels = [labels[sid] for sid in ids]
    table = stratified_eval(aligned_results, aligned_labels, methods)
    tubes = tube_auc(aligned_results, aligned_labels)
    if args.json:
        print(json.dumps({"eval": table.to_json(), "tube_auc": tubes}, indent=2))
    else:
        print(table.to_text())
        print(f"tube AUC: standard={_fmt(tubes['standard'])} pigtail={_fmt(tubes['pigtail'])}")
    return 0


def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{v:.3f}"


def cmd_nlp(args: argparse.Namespace) -> int:
    if args.report:
        try:
            text = Path(args.report).read_text(encoding="utf-8")
        except OSError as exc:
            return _fail(str(exc))
    else:
        text = sys.stdin.read()
    print(json.dumps(classify_report(text).to_json(), indent=2))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((args.host, args.port))
    except OSError as exc:
        return _fail(f"cannot bind {args.host}:{args.port}: {exc}")
    finally:
        probe.close()

    ui_dir = args.ui_dir
    if ui_dir is None:
        candidate = Path("frontend") / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    with Store(args.data_dir) as store:
        app = create_app(store, ui_dir=ui_dir, default_backend=args.backend)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptxtriage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="ingest a manifest and score every study")
    run.add_argument("--manifest", required=True)
    run.add_argument("--backend", default="stub", help="oracle | stub | http(s) URL")
    run.add_argument("--config", default=None, help="JSON file mirroring PipelineConfig")
    run.add_argument("--out", required=True, help="line-delimited JSON results path")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--data-dir", default=None, help="persist the event log here")
    run.add_argument("--noise-eps", type=float, default=0.0, help="oracle score noise")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="stratified AUC table from results + labels")
    ev.add_argument("--results", required=True)
    ev.add_argument("--manifest", required=True, help="manifest carrying ground-truth labels")
    ev.add_argument("--methods", default="a,b,c,ens_ac,ens_abc")
    ev.add_argument("--json", action="store_true")
    ev.set_defaults(func=cmd_eval)

    nlp = sub.add_parser("nlp", help="classify one report (file or stdin)")
    nlp.add_argument("--report", default=None)
    nlp.set_defaults(func=cmd_nlp)

    serve = sub.add_parser("serve", help="run the review service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--data-dir", required=True)
    serve.add_argument("--backend", default="stub")
    serve.add_argument("--ui-dir", default=None)
    serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is None and args.command == "run":
        import os

        args.workers = os.cpu_count() or 1
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
