"""Per-study orchestration: view gate, lung geometry, the three pneumothorax
scorers, their ensembles, and the chest-tube classifier.

Stage contract: only frontal films are scored; methods A (full-image
classifier) and C (segmentation scorer) consume the lung-cropped image,
method B scores the four apical/basilar patches from the original frame,
and the tube classifier always sees the full uncropped image. Any stage
failure yields an errored result annotated with the stage name, never a
silent partial success, so large batch runs survive individual bad studies.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping

from . import imaging
from .backends.protocol import (
    Backend,
    BackendUnavailable,
    MissingOracle,
    ModelUnknown,
    ProtocolError,
    infer_map,
    infer_scalar,
)
from .imaging import ImageGray, crop, load_image, normalize_minmax, resize_bilinear
from .patches import DegenerateLung, extract_patches
from .segpost import EmptyMap, extract_lung_fields, fallback_lung_fields, lung_crop_box, seg_score

if TYPE_CHECKING:
    from .store import StudyRecord


class MissingMember(KeyError):
    """Ensemble asked for a member score that was never produced."""


ENSEMBLE_MEMBERS = ("A", "B", "C")

_STAGE_ERRORS = (
    imaging.MalformedHeader,
    imaging.TruncatedData,
    imaging.UnsupportedMaxval,
    imaging.OutOfBounds,
    imaging.ImageLoadError,
    BackendUnavailable,
    ProtocolError,
    ModelUnknown,
    MissingOracle,
    EmptyMap,
    DegenerateLung,
    OSError,
)


@dataclass(frozen=True)
class PipelineConfig:
    view_threshold: float = 0.5
    patch_out_size: int = 224
    crop_margin: float = 0.05
    ensemble_members: tuple[str, ...] = ENSEMBLE_MEMBERS
    ptx_threshold: float = 0.5
    tube_threshold: float = 0.5
    # optional square resize of the lung crop before methods A and C; None
    # keeps the native crop resolution (model input size is deployment config)
    crop_size: int | None = None

    def __post_init__(self):
        for name in ("view_threshold", "ptx_threshold", "tube_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {v}")
        members = tuple(self.ensemble_members)
        if not members or any(m not in ENSEMBLE_MEMBERS for m in members):
            raise ValueError(f"ensemble_members must be a nonempty subset of A/B/C, got {members}")
        object.__setattr__(self, "ensemble_members", members)

    def to_json(self) -> dict:
        return {
            "view_threshold": self.view_threshold,
            "patch_out_size": self.patch_out_size,
            "crop_margin": self.crop_margin,
            "ensemble_members": list(self.ensemble_members),
            "ptx_threshold": self.ptx_threshold,
            "tube_threshold": self.tube_threshold,
            "crop_size": self.crop_size,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "PipelineConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        known = dict(d)
        if "ensemble_members" in known:
            known["ensemble_members"] = tuple(known["ensemble_members"])
        return cls(**known)


@dataclass(frozen=True)
class Scores:
    a_full: float
    b_patch: float
    b_per_patch: dict[str, float]
    c_seg: float
    ens_ac: float
    ens_abc: float

    def to_json(self) -> dict:
        return {
            "a_full": self.a_full,
            "b_patch": self.b_patch,
            "b_per_patch": dict(self.b_per_patch),
            "c_seg": self.c_seg,
            "ens_ac": self.ens_ac,
            "ens_abc": self.ens_abc,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "Scores":
        return cls(
            a_full=d["a_full"],
            b_patch=d["b_patch"],
            b_per_patch=dict(d["b_per_patch"]),
            c_seg=d["c_seg"],
            ens_ac=d["ens_ac"],
            ens_abc=d["ens_abc"],
        )


@dataclass(frozen=True)
class TubeScores:
    standard: float
    pigtail: float

    @property
    def any(self) -> float:
        return max(self.standard, self.pigtail)

    def to_json(self) -> dict:
        return {"standard": self.standard, "pigtail": self.pigtail, "any": self.any}

    @classmethod
    def from_json(cls, d: Mapping) -> "TubeScores":
        return cls(standard=d["standard"], pigtail=d["pigtail"])


@dataclass
class StudyResult:
    """Everything the pipeline produced for one study."""

    study_id: str
    status: str = "ok"  # ok | non_frontal | error
    view_score: float | None = None
    frontal: bool | None = None
    scores: Scores | None = None
    tube: TubeScores | None = None
    degraded_lungs: bool = False
    timings: dict[str, float] = field(default_factory=dict)  # stage -> ms
    patch_rects: dict[str, list[int]] = field(default_factory=dict)
    image_size: tuple[int, int] | None = None  # (width, height)
    skip_reason: str | None = None
    error: str | None = None
    error_stage: str | None = None

    @property
    def complete(self) -> bool:
        return self.status == "ok"

    def to_json(self) -> dict:
        return {
            "study_id": self.study_id,
            "status": self.status,
            "view_score": self.view_score,
            "frontal": self.frontal,
            "scores": self.scores.to_json() if self.scores else None,
            "tube": self.tube.to_json() if self.tube else None,
            "degraded_lungs": self.degraded_lungs,
            "timings": self.timings,
            "patch_rects": self.patch_rects,
            "image_size": list(self.image_size) if self.image_size else None,
            "skip_reason": self.skip_reason,
            "error": self.error,
            "error_stage": self.error_stage,
        }

    @classmethod
    def from_json(cls, d: Mapping) -> "StudyResult":
        return cls(
            study_id=d["study_id"],
            status=d.get("status", "ok"),
            view_score=d.get("view_score"),
            frontal=d.get("frontal"),
            scores=Scores.from_json(d["scores"]) if d.get("scores") else None,
            tube=TubeScores.from_json(d["tube"]) if d.get("tube") else None,
            degraded_lungs=bool(d.get("degraded_lungs", False)),
            timings=dict(d.get("timings", {})),
            patch_rects={k: list(v) for k, v in (d.get("patch_rects") or {}).items()},
            image_size=tuple(d["image_size"]) if d.get("image_size") else None,
            skip_reason=d.get("skip_reason"),
            error=d.get("error"),
            error_stage=d.get("error_stage"),
        )


def classify_view(
    img: ImageGray, backend: Backend, cfg: PipelineConfig, study_id: str | None = None
) -> tuple[bool, float]:
    """Score the view model; frontal is inclusive at the threshold."""
    score = infer_scalar(backend, "view", normalize_minmax(img), study_id)
    return score >= cfg.view_threshold, score


def aggregate_patch_scores(scores: Iterable[float]) -> float:
    """Max over the four patch scores: one strong regional hit must survive."""
    values = [float(s) for s in scores]
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ValueError(f"patch scores must lie in [0,1], got {values}")
    return max(values)


def ensemble(scores: Mapping[str, float], members: Iterable[str]) -> float:
    """Unweighted mean of the selected member scores."""
    picked = []
    for m in members:
        if m not in scores:
            raise MissingMember(m)
        picked.append(float(scores[m]))
    if not picked:
        raise MissingMember("ensemble needs at least one member")
    return sum(picked) / len(picked)


def _load_study_image(study: "StudyRecord") -> ImageGray:
    data = getattr(study, "image_bytes", None)
    if data is None:
        data = Path(study.image_path).read_bytes()
    return load_image(data)


def run_study(study: "StudyRecord", backend: Backend, cfg: PipelineConfig) -> StudyResult:
    """Run the full image pipeline for one study.

    `study` needs `study_id` and `image_path` (or preloaded `image_bytes`).
    Returns a StudyResult in every case; load or stage failures come back
    with status "error" and the failing stage recorded.
    """
    result = StudyResult(study_id=study.study_id)
    stage = "load"
    t0 = time.perf_counter()

    def mark(name: str) -> None:
        nonlocal t0
        now = time.perf_counter()
        result.timings[name] = (now - t0) * 1000.0
        t0 = now

    try:
        img = _load_study_image(study)
        result.image_size = (img.width, img.height)
        mark(stage)

        stage = "view"
        frontal, view_score = classify_view(img, backend, cfg, study.study_id)
        result.view_score = view_score
        result.frontal = frontal
        mark(stage)
        if not frontal:
            result.status = "non_frontal"
            result.skip_reason = "non-frontal"
            return result

        stage = "lung_fields"
        lung_map = infer_map(backend, "lung_seg", normalize_minmax(img), study.study_id)
        lf = extract_lung_fields(lung_map)
        result.degraded_lungs = lf.degraded
        box = lung_crop_box(lf, cfg.crop_margin, imgw=img.width, imgh=img.height)
        lung_img = crop(img, box)
        if cfg.crop_size:
            lung_img = resize_bilinear(lung_img, cfg.crop_size, cfg.crop_size)
        lung_input = normalize_minmax(lung_img)
        mark(stage)

        stage = "method_a"
        a_full = infer_scalar(backend, "ptx_full", lung_input, study.study_id)
        mark(stage)

        stage = "method_b"
        try:
            patch_list = extract_patches(img, lf, cfg.patch_out_size)
        except DegenerateLung:
            result.degraded_lungs = True
            fallback = fallback_lung_fields(img.width, img.height)
            patch_list = extract_patches(img, fallback, cfg.patch_out_size)
        b_per_patch = {
            p.tag.value: infer_scalar(backend, "ptx_patch", normalize_minmax(p.image), study.study_id)
            for p in patch_list
        }
        result.patch_rects = {p.tag.value: p.source_rect.to_json() for p in patch_list}
        b_patch = aggregate_patch_scores(b_per_patch.values())
        mark(stage)

        stage = "method_c"
        ptx_map = infer_map(backend, "ptx_seg", lung_input, study.study_id)
        c_seg = seg_score(ptx_map)
        mark(stage)

        member_scores = {"A": a_full, "B": b_patch, "C": c_seg}
        result.scores = Scores(
            a_full=a_full,
            b_patch=b_patch,
            b_per_patch=b_per_patch,
            c_seg=c_seg,
            ens_ac=ensemble(member_scores, ("A", "C")),
            ens_abc=ensemble(member_scores, ("A", "B", "C")),
        )

        stage = "tube"
        standard, pigtail = infer_scalar(backend, "tube", normalize_minmax(img), study.study_id)
        result.tube = TubeScores(standard=standard, pigtail=pigtail)
        mark(stage)
        return result
    except _STAGE_ERRORS as exc:
        result.status = "error"
        result.error = f"{type(exc).__name__}: {exc}"
        result.error_stage = stage
        return result
