"""Durable study store: manifest ingestion, batch runs, and the worklist.

Persistence is a single append-only line-delimited JSON event log plus an
in-memory index rebuilt by replay on open. That keeps the tool dependency
free, trivially auditable, and crash safe: any prefix of the log is a valid
state, and a torn final line is discarded on load. All appends go through
one writer lock; batch workers compute in parallel and funnel their events
through it.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .backends import Backend, OracleBackend, OracleRecord, RemoteBackend, StubBackend
from .evaluate import METHODS, stratified_eval, tube_auc
from .pipeline import PipelineConfig, StudyResult, run_study
from .report_nlp import ReportClassification, classify_report
from .triage import AdjudicationRecord, IncompleteResult, NotFlagged, TriageDecision, UnknownStudy, decide

LABEL_VIEWS = ("AP", "PA", "LATERAL", "OTHER")
TUBE_TYPES = ("standard", "pigtail")
STATUSES = ("ingested", "processed", "flagged", "adjudicated", "errored", "skipped_non_frontal")


class FileUnreadable(OSError):
    """Manifest or data file cannot be opened."""


@dataclass(frozen=True)
class Labels:
    pneumothorax: bool | None = None
    chest_tube: bool | None = None
    tube_type: str | None = None
    view: str | None = None

    @classmethod
    def from_json(cls, d: Mapping) -> "Labels":
        tube_type = d.get("tube_type")
        if tube_type is not None and tube_type not in TUBE_TYPES:
            raise ValueError(f"labels.tube_type must be one of {TUBE_TYPES}, got {tube_type!r}")
        view = d.get("view")
        if view is not None:
            view = str(view).upper()
            if view not in LABEL_VIEWS:
                raise ValueError(f"labels.view must be one of {LABEL_VIEWS}, got {view!r}")
        return cls(
            pneumothorax=None if "pneumothorax" not in d else bool(d["pneumothorax"]),
            chest_tube=None if "chest_tube" not in d else bool(d["chest_tube"]),
            tube_type=tube_type,
            view=view,
        )

    def to_json(self) -> dict:
        return {
            "pneumothorax": self.pneumothorax,
            "chest_tube": self.chest_tube,
            "tube_type": self.tube_type,
            "view": self.view,
        }


@dataclass(frozen=True)
class StudyRecord:
    """One ingested study: image + report references and optional truth."""

    study_id: str
    image_path: str
    report: str | None = None  # inline report text
    report_path: str | None = None
    labels: Labels | None = None
    oracle: OracleRecord | None = None

    @classmethod
    def from_manifest(cls, d: object) -> "StudyRecord":
        if not isinstance(d, dict):
            raise ValueError("manifest line must be a JSON object")
        study_id = d.get("study_id")
        if not isinstance(study_id, str) or not study_id:
            raise ValueError("missing or empty study_id")
        image_path = d.get("image_path")
        if not isinstance(image_path, str) or not image_path:
            raise ValueError("missing or empty image_path")
        oracle_d = d.get("oracle")
        if oracle_d is not None:
            oracle_d = dict(oracle_d)
            loc = oracle_d.get("location")
            if loc is not None and loc not in ("right_apex", "left_apex", "right_base", "left_base"):
                raise ValueError(f"oracle.location invalid: {loc!r}")
        return cls(
            study_id=study_id,
            image_path=image_path,
            report=d.get("report"),
            report_path=d.get("report_path"),
            labels=Labels.from_json(d["labels"]) if d.get("labels") is not None else None,
            oracle=OracleRecord.from_json(oracle_d) if oracle_d is not None else None,
        )

    def to_json(self) -> dict:
        return {
            "study_id": self.study_id,
            "image_path": self.image_path,
            "report": self.report,
            "report_path": self.report_path,
            "labels": self.labels.to_json() if self.labels else None,
            "oracle": self.oracle.to_json() if self.oracle else None,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "StudyRecord":
        return cls(
            study_id=d["study_id"],
            image_path=d["image_path"],
            report=d.get("report"),
            report_path=d.get("report_path"),
            labels=Labels.from_json(d["labels"]) if d.get("labels") else None,
            oracle=OracleRecord.from_json(d["oracle"]) if d.get("oracle") else None,
        )

    def report_text(self) -> str:
        if self.report is not None:
            return self.report
        if self.report_path is not None:
            return Path(self.report_path).read_text()
        return ""


@dataclass
class StudyState:
    record: StudyRecord
    status: str = "ingested"
    result: StudyResult | None = None
    nlp: ReportClassification | None = None
    triage: TriageDecision | None = None
    adjudications: list[AdjudicationRecord] = field(default_factory=list)
    triage_ts: float | None = None

    @property
    def current_adjudication(self) -> AdjudicationRecord | None:
        return self.adjudications[-1] if self.adjudications else None


@dataclass(frozen=True)
class IngestSummary:
    ingested: int
    rejected: list[tuple[int, str]]  # (1-based line number, reason)
    warnings: list[str]

    def to_json(self) -> dict:
        return {
            "ingested": self.ingested,
            "rejected": [{"line": n, "reason": r} for n, r in self.rejected],
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class BatchSummary:
    total: int
    processed: int
    flagged: int
    errored: int
    skipped: int
    config: dict

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "processed": self.processed,
            "flagged": self.flagged,
            "errored": self.errored,
            "skipped": self.skipped,
            "config": self.config,
        }


class Store:
    """Event-sourced study index over a line-delimited JSON log."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / "events.ndjson"
        self._studies: dict[str, StudyState] = {}
        self._seq = 0
        self._lock = threading.RLock()
        self._replay()
        self._fh = open(self.log_path, "a", encoding="utf-8")

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- event log -----------------------------------------------------------

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as fh:
            lines = fh.readlines()
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                if i == len(lines) - 1:
                    break  # torn final write from a crash; drop it
                raise
            self._apply(event)
            self._seq = event["seq"]

    def _append(self, kind: str, payload: dict) -> dict:
        with self._lock:
            self._seq += 1
            event = {"seq": self._seq, "ts": time.time(), "kind": kind, "payload": payload}
            self._fh.write(json.dumps(event) + "\n")
            self._fh.flush()
            self._apply(event)
            return event

    def _apply(self, event: dict) -> None:
        kind, payload = event["kind"], event["payload"]
        if kind == "ingest":
            record = StudyRecord.from_json(payload)
            state = self._studies.get(record.study_id)
            if state is None:
                self._studies[record.study_id] = StudyState(record=record)
            else:
                # data changed: keep the adjudication history, reset processing
                state.record = record
                state.status = "ingested"
                state.result = None
                state.nlp = None
                state.triage = None
                state.triage_ts = None
        elif kind == "result":
            state = self._studies[payload["study_id"]]
            state.result = StudyResult.from_json(payload["result"])
            state.nlp = (
                ReportClassification.from_json(payload["nlp"]) if payload.get("nlp") else None
            )
            if state.result.status == "error":
                state.status = "errored"
            elif state.result.status == "non_frontal":
                state.status = "skipped_non_frontal"
            else:
                state.status = "processed"
        elif kind == "triage":
            decision = TriageDecision.from_json(payload)
            state = self._studies[decision.study_id]
            state.triage = decision
            state.triage_ts = event.get("ts")
            if decision.flagged and state.status == "processed":
                state.status = "flagged"
        elif kind == "adjudication":
            record = AdjudicationRecord.from_json(payload)
            state = self._studies[record.study_id]
            state.adjudications.append(record)
            state.status = "adjudicated"
        else:
            raise ValueError(f"unknown event kind {kind!r}")

    # -- ingestion -----------------------------------------------------------

    def ingest_manifest(self, path: str | Path) -> IngestSummary:
        """Upsert studies from a line-delimited JSON manifest.

        Invalid lines are reported, never fatal; a duplicate study_id within
        one manifest supersedes the earlier occurrence and is counted once.
        Re-ingesting an unchanged record is a no-op (no event is written).
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise FileUnreadable(f"cannot read manifest {path}: {exc}") from exc
        rejected: list[tuple[int, str]] = []
        warnings: list[str] = []
        accepted: dict[str, StudyRecord] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = StudyRecord.from_manifest(json.loads(line))
            except json.JSONDecodeError as exc:
                rejected.append((lineno, f"invalid JSON: {exc}"))
                continue
            except ValueError as exc:
                rejected.append((lineno, str(exc)))
                continue
            if record.study_id in accepted:
                warnings.append(
                    f"line {lineno}: duplicate study_id {record.study_id!r} supersedes earlier line"
                )
            accepted[record.study_id] = record
        with self._lock:
            for record in accepted.values():
                existing = self._studies.get(record.study_id)
                if existing is not None and existing.record == record:
                    continue  # idempotent re-ingest
                self._append("ingest", record.to_json())
        return IngestSummary(ingested=len(accepted), rejected=rejected, warnings=warnings)

    # -- batch processing ----------------------------------------------------

    def _select(self, filter: Mapping | None) -> list[StudyState]:
        states = list(self._studies.values())
        if not filter:
            return states
        statuses = filter.get("status")
        if statuses:
            wanted = {statuses} if isinstance(statuses, str) else set(statuses)
            states = [s for s in states if s.status in wanted]
        ids = filter.get("study_ids")
        if ids:
            wanted_ids = set(ids)
            states = [s for s in states if s.record.study_id in wanted_ids]
        return states

    def run_batch(
        self,
        backend: Backend,
        cfg: PipelineConfig | None = None,
        filter: Mapping | None = None,
        workers: int = 1,
        progress_every: int = 1000,
    ) -> BatchSummary:
        """Score, classify, and triage every matching study.

        Per-study failures become errored results, never batch aborts. With
        workers > 1 the studies are processed on a thread pool; events still
        flow through the single log writer, so the resulting state matches a
        serial run up to event order.
        """
        cfg = cfg or PipelineConfig()
        selected = sorted(self._select(filter), key=lambda s: s.record.study_id)

        def compute(state: StudyState):
            record = state.record
            result = run_study(record, backend, cfg)
            nlp = None
            if result.status != "error":
                try:
                    nlp = classify_report(record.report_text())
                except OSError as exc:
                    result = StudyResult(
                        study_id=record.study_id,
                        status="error",
                        error=f"{type(exc).__name__}: {exc}",
                        error_stage="report",
                    )
            decision = None
            if result.status != "error":
                try:
                    decision = decide(result, nlp, cfg)
                except IncompleteResult:
                    decision = None
            return result, nlp, decision

        done = 0
        counts = {"processed": 0, "flagged": 0, "errored": 0, "skipped": 0}
        if workers <= 1:
            outputs = map(compute, selected)
        else:
            pool = ThreadPoolExecutor(max_workers=workers)
            outputs = pool.map(compute, selected)
        for result, nlp, decision in outputs:
            self._append(
                "result",
                {
                    "study_id": result.study_id,
                    "result": result.to_json(),
                    "nlp": nlp.to_json() if nlp else None,
                },
            )
            if decision is not None:
                self._append("triage", decision.to_json())
            if result.status == "error":
                counts["errored"] += 1
            elif result.status == "non_frontal":
                counts["skipped"] += 1
            elif decision is not None and decision.flagged:
                counts["flagged"] += 1
            else:
                counts["processed"] += 1
            done += 1
            if progress_every and done % progress_every == 0:
                print(f"processed {done}/{len(selected)} studies", flush=True)
        if workers > 1:
            pool.shutdown()
        return BatchSummary(total=len(selected), config=cfg.to_json(), **counts)

    # -- queries -------------------------------------------------------------

    def get(self, study_id: str) -> StudyState:
        state = self._studies.get(study_id)
        if state is None:
            raise UnknownStudy(study_id)
        return state

    def studies(self) -> list[StudyState]:
        return list(self._studies.values())

    def oracle_records(self) -> dict[str, OracleRecord]:
        return {
            sid: s.record.oracle for sid, s in self._studies.items() if s.record.oracle is not None
        }

    def _summary(self, state: StudyState) -> dict:
        result = state.result
        triage = state.triage
        return {
            "study_id": state.record.study_id,
            "status": state.status,
            "flagged": bool(triage.flagged) if triage else False,
            "ensemble_score": triage.ensemble_score if triage else None,
            "ensemble_members": list(triage.ensemble_members) if triage else None,
            "scores": result.scores.to_json() if result and result.scores else None,
            "tube": result.tube.to_json() if result and result.tube else None,
            "view_score": result.view_score if result else None,
            "degraded_lungs": result.degraded_lungs if result else False,
            "thresholds_used": dict(triage.thresholds_used) if triage else None,
            "nlp": state.nlp.to_json() if state.nlp else None,
            "flagged_at": state.triage_ts if triage and triage.flagged else None,
            "adjudication": (
                state.current_adjudication.to_json() if state.current_adjudication else None
            ),
        }

    def worklist(self, status: str | None = "flagged") -> list[dict]:
        """Study summaries for review, best ensemble score first, id breaking ties."""
        states = self.studies()
        if status is not None:
            states = [s for s in states if s.status == status]
        summaries = [self._summary(s) for s in states]
        summaries.sort(
            key=lambda d: (
                -(d["ensemble_score"] if d["ensemble_score"] is not None else -1.0),
                d["study_id"],
            )
        )
        return summaries

    def study_detail(self, study_id: str) -> dict:
        state = self.get(study_id)
        detail = self._summary(state)
        detail["record"] = state.record.to_json()
        detail["report_text"] = state.record.report_text()
        detail["result"] = state.result.to_json() if state.result else None
        detail["triage"] = state.triage.to_json() if state.triage else None
        detail["adjudications"] = [a.to_json() for a in state.adjudications]
        return detail

    def image_bytes(self, study_id: str) -> tuple[bytes, str]:
        """Raw image file bytes plus a sniffed content type."""
        state = self.get(study_id)
        data = Path(state.record.image_path).read_bytes()
        if data.startswith(b"\x89PNG"):
            return data, "image/png"
        return data, "image/x-portable-graymap"

    # -- adjudication --------------------------------------------------------

    def adjudicate(self, study_id: str, record: AdjudicationRecord) -> str:
        """Append a reviewer decision; allowed while flagged or adjudicated."""
        with self._lock:
            state = self.get(study_id)
            if state.status not in ("flagged", "adjudicated"):
                raise NotFlagged(f"study {study_id} has status {state.status!r}, not flagged")
            if record.study_id != study_id:
                record = AdjudicationRecord(
                    study_id=study_id,
                    decision=record.decision,
                    reviewer_id=record.reviewer_id,
                    note=record.note,
                    timestamp=record.timestamp,
                )
            self._append("adjudication", record.to_json())
            return self.get(study_id).status

    # -- metrics -------------------------------------------------------------

    def funnel(self) -> dict:
        states = self.studies()
        return {
            "total": len(states),
            "frontal": sum(1 for s in states if s.result is not None and s.result.frontal),
            "flagged": sum(
                1
                for s in states
                if (s.triage is not None and s.triage.flagged) or s.status == "adjudicated"
            ),
            "confirmed": sum(
                1
                for s in states
                if s.current_adjudication is not None
                and s.current_adjudication.decision == "confirmed_missed"
            ),
        }

    def metrics(self, methods: Sequence[str] = tuple(METHODS)) -> dict:
        """Stratified EvalTable over labeled studies plus the triage funnel."""
        labeled = [
            s
            for s in self.studies()
            if s.result is not None
            and s.record.labels is not None
            and s.record.labels.pneumothorax is not None
            and s.record.labels.chest_tube is not None
        ]
        out: dict = {"funnel": self.funnel(), "eval": None, "tube_auc": None}
        if labeled:
            results = [s.result for s in labeled]
            labels = [
                {"ptx": s.record.labels.pneumothorax, "tube": s.record.labels.chest_tube}
                for s in labeled
            ]
            out["eval"] = stratified_eval(results, labels, methods).to_json()
            out["tube_auc"] = tube_auc(
                results,
                [
                    {"tube": s.record.labels.chest_tube, "tube_type": s.record.labels.tube_type}
                    for s in labeled
                ],
            )
        return out


def resolve_backend(spec: str, store: Store | None = None, noise_eps: float = 0.0) -> Backend:
    """Backend from a CLI/API spec: "oracle", "stub", or a http(s) URL."""
    if spec == "stub":
        return StubBackend()
    if spec == "oracle":
        records = store.oracle_records() if store else {}
        return OracleBackend(records, noise_eps=noise_eps)
    if spec.startswith(("http://", "https://")):
        return RemoteBackend(spec)
    raise ValueError(f"backend must be 'oracle', 'stub', or a URL, got {spec!r}")
