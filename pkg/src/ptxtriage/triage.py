"""Missed-pneumothorax flagging and the adjudication lifecycle.

A study is flagged for human review only when all four predicates hold:
the film is frontal, the report makes no positive pneumothorax mention, no
chest tube is detected (a tube means the pleural abnormality is already
known), and the image ensemble scores positive. Flagged studies are then
confirmed or dismissed by a reviewer; later decisions supersede but the
full history is retained.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping

from .pipeline import PipelineConfig, StudyResult, ensemble
from .report_nlp import ReportClassification

if TYPE_CHECKING:
    from .store import Store

ADJUDICATION_DECISIONS = ("confirmed_missed", "not_missed", "indeterminate")


class IncompleteResult(ValueError):
    """Triage asked to decide on an errored pipeline output."""


class NotFlagged(ValueError):
    """Adjudication attempted on a study that is not in the flagged state."""


class UnknownStudy(KeyError):
    """No study with that id."""


@dataclass(frozen=True)
class TriageDecision:
    study_id: str
    flagged: bool
    reasons: dict[str, bool]  # frontal, nlp_negative, tube_negative, ptx_positive
    thresholds_used: dict[str, float]
    ensemble_score: float | None  # score of the configured ensemble (audit trail)
    ensemble_members: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "study_id": self.study_id,
            "flagged": self.flagged,
            "reasons": dict(self.reasons),
            "thresholds_used": dict(self.thresholds_used),
            "ensemble_score": self.ensemble_score,
            "ensemble_members": list(self.ensemble_members),
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "TriageDecision":
        return cls(
            study_id=d["study_id"],
            flagged=bool(d["flagged"]),
            reasons=dict(d["reasons"]),
            thresholds_used=dict(d["thresholds_used"]),
            ensemble_score=d.get("ensemble_score"),
            ensemble_members=tuple(d.get("ensemble_members", ())),
        )


@dataclass(frozen=True)
class AdjudicationRecord:
    study_id: str
    decision: str  # confirmed_missed | not_missed | indeterminate
    reviewer_id: str
    note: str = ""
    timestamp: float = 0.0  # UTC seconds; 0 -> filled at persist time

    def __post_init__(self):
        if self.decision not in ADJUDICATION_DECISIONS:
            raise ValueError(f"decision must be one of {ADJUDICATION_DECISIONS}, got {self.decision!r}")
        if self.timestamp == 0.0:
            object.__setattr__(self, "timestamp", time.time())

    def to_json(self) -> dict:
        return {
            "study_id": self.study_id,
            "decision": self.decision,
            "reviewer_id": self.reviewer_id,
            "note": self.note,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "AdjudicationRecord":
        return cls(
            study_id=d["study_id"],
            decision=d["decision"],
            reviewer_id=d["reviewer_id"],
            note=d.get("note", ""),
            timestamp=float(d.get("timestamp", 0.0)),
        )


def decide(result: StudyResult, nlp: ReportClassification, cfg: PipelineConfig) -> TriageDecision:
    """Evaluate the flag conjunction for one completed study.

    Non-frontal studies are never flagged (there is nothing to score) but
    still get a decision record so the triage denominator stays auditable.
    """
    if result.status == "error":
        raise IncompleteResult(f"study {result.study_id}: errored at {result.error_stage}")

    thresholds = {"ptx_threshold": cfg.ptx_threshold, "tube_threshold": cfg.tube_threshold}
    nlp_negative = not nlp.positive
    frontal = bool(result.frontal)

    if not frontal or result.scores is None or result.tube is None:
        return TriageDecision(
            study_id=result.study_id,
            flagged=False,
            reasons={
                "frontal": False,
                "nlp_negative": nlp_negative,
                "tube_negative": False,
                "ptx_positive": False,
            },
            thresholds_used=thresholds,
            ensemble_score=None,
            ensemble_members=cfg.ensemble_members,
        )

    members = {"A": result.scores.a_full, "B": result.scores.b_patch, "C": result.scores.c_seg}
    score = ensemble(members, cfg.ensemble_members)
    ptx_positive = score >= cfg.ptx_threshold
    tube_negative = result.tube.any < cfg.tube_threshold
    return TriageDecision(
        study_id=result.study_id,
        flagged=frontal and nlp_negative and tube_negative and ptx_positive,
        reasons={
            "frontal": frontal,
            "nlp_negative": nlp_negative,
            "tube_negative": tube_negative,
            "ptx_positive": ptx_positive,
        },
        thresholds_used=thresholds,
        ensemble_score=score,
        ensemble_members=cfg.ensemble_members,
    )


def adjudicate(study_id: str, record: AdjudicationRecord, store: "Store") -> str:
    """Persist a reviewer decision for a flagged study; returns the new status.

    Records are append-only: a later decision supersedes but history stays.
    Raises UnknownStudy / NotFlagged when the study is missing or not in a
    reviewable state (already-adjudicated studies stay reviewable so a
    decision can be corrected).
    """
    return store.adjudicate(study_id, record)
