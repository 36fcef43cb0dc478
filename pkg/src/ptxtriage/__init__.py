"""Missed-pneumothorax triage toolkit.

A chest-x-ray scoring pipeline (view gate, lung-field geometry, three
ensembled pneumothorax scorers, chest-tube classifier), a rule-based report
classifier, triage logic for image-positive / report-negative studies,
chest-tube-stratified AUC evaluation, and an event-sourced store with a
reviewer worklist service. Trained models attach through a small inference
protocol; deterministic stub and oracle backends make everything testable
without weights.
"""

from .imaging import ImageGray, Rect, crop, load_image, load_pgm, normalize_minmax, resize_bilinear, save_pgm
from .patches import Patch, PatchTag, extract_patches
from .pipeline import PipelineConfig, Scores, StudyResult, TubeScores, ensemble, run_study
from .report_nlp import ReportClassification, classify_report, classify_sentence, split_sentences
from .segpost import (
    BinaryMask,
    LungFields,
    ProbMap,
    connected_components,
    extract_lung_fields,
    lung_crop_box,
    seg_score,
    threshold_map,
)
from .evaluate import EvalTable, auc, pct_change, stratified_eval
from .triage import AdjudicationRecord, TriageDecision, adjudicate, decide
from .store import Labels, Store, StudyRecord, resolve_backend

__version__ = "0.1.0"

__all__ = [
    "AdjudicationRecord",
    "BinaryMask",
    "EvalTable",
    "ImageGray",
    "Labels",
    "LungFields",
    "Patch",
    "PatchTag",
    "PipelineConfig",
    "ProbMap",
    "Rect",
    "ReportClassification",
    "Scores",
    "Store",
    "StudyRecord",
    "StudyResult",
    "TriageDecision",
    "TubeScores",
    "adjudicate",
    "auc",
    "classify_report",
    "classify_sentence",
    "connected_components",
    "crop",
    "decide",
    "ensemble",
    "extract_lung_fields",
    "extract_patches",
    "load_image",
    "load_pgm",
    "lung_crop_box",
    "normalize_minmax",
    "pct_change",
    "resize_bilinear",
    "resolve_backend",
    "run_study",
    "save_pgm",
    "seg_score",
    "split_sentences",
    "stratified_eval",
    "threshold_map",
]
