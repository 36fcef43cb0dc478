"""Deterministic in-process backends: stub, label-driven oracle, recorder.

These stand in for the trained models so every pipeline stage is testable.
The stub emits fixed, label-free outputs (most notably a synthetic two-blob
lung map); the oracle turns per-study ground-truth records into separable
scores, optionally with seeded noise for AUC exercises.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..imaging import ImageGray, Rect
from .protocol import MODEL_IDS, Backend, MissingOracle, ModelUnknown

FRONTAL_VIEWS = frozenset({"AP", "PA"})
PTX_LOCATIONS = frozenset({"right_apex", "left_apex", "right_base", "left_base"})

# synthetic lung geometry, as fractions of the image: two rectangles centered
# at (0.28 W, 0.55 H) and (0.72 W, 0.55 H), each 0.30 W x 0.55 H
_LUNG_CENTERS_X = (0.28, 0.72)
_LUNG_CENTER_Y = 0.55
_LUNG_W = 0.30
_LUNG_H = 0.55


def _span(center: float, extent: float, limit: int) -> tuple[int, int]:
    lo = max(0, int(round(center - extent / 2.0)))
    hi = min(limit, int(round(center + extent / 2.0)))
    return lo, max(hi, lo + 1)


def stub_lung_rects(width: int, height: int) -> tuple[Rect, Rect]:
    """Synthetic (image-left, image-right) lung rectangles for a W x H frame."""
    y0, y1 = _span(_LUNG_CENTER_Y * height, _LUNG_H * height, height)
    rects = []
    for cx in _LUNG_CENTERS_X:
        x0, x1 = _span(cx * width, _LUNG_W * width, width)
        rects.append(Rect(x0, y0, x1 - x0, y1 - y0))
    return rects[0], rects[1]


def stub_lung_map(width: int, height: int) -> np.ndarray:
    """Probability 1.0 inside the two synthetic lung rectangles, 0 elsewhere."""
    out = np.zeros((height, width), dtype=np.float64)
    for r in stub_lung_rects(width, height):
        out[r.y0 : r.y1, r.x0 : r.x1] = 1.0
    return out


@dataclass(frozen=True)
class OracleRecord:
    """Ground truth a test oracle can answer from."""

    pneumothorax: bool = False
    chest_tube: bool = False
    tube_type: str | None = None  # "standard" | "pigtail"
    view: str = "AP"  # "AP" | "PA" | "LATERAL" | "OTHER"
    location: str | None = None  # one of PTX_LOCATIONS

    @classmethod
    def from_json(cls, d: dict) -> "OracleRecord":
        return cls(
            pneumothorax=bool(d.get("pneumothorax", False)),
            chest_tube=bool(d.get("chest_tube", False)),
            tube_type=d.get("tube_type"),
            view=str(d.get("view", "AP")).upper(),
            location=d.get("location"),
        )

    def to_json(self) -> dict:
        return {
            "pneumothorax": self.pneumothorax,
            "chest_tube": self.chest_tube,
            "tube_type": self.tube_type,
            "view": self.view,
            "location": self.location,
        }


class StubBackend(Backend):
    """Fixed label-free outputs; exercises plumbing without any weights.

    view -> 0.9 (assumes a frontal film), ptx_full / ptx_patch -> the mean
    input intensity, tube -> (0.1, 0.1), lung_seg -> the synthetic two-blob
    map, ptx_seg -> all zeros.
    """

    def infer(self, model: str, image: ImageGray, study_id: str | None = None) -> np.ndarray:
        if model == "view":
            return np.array([0.9])
        if model in ("ptx_full", "ptx_patch"):
            return np.array([float(image.pixels.mean())])
        if model == "tube":
            return np.array([0.1, 0.1])
        if model == "lung_seg":
            return stub_lung_map(image.width, image.height)
        if model == "ptx_seg":
            return np.zeros(image.pixels.shape)
        raise ModelUnknown(f"unknown model id {model!r}")


def _noise(study_id: str, model: str, eps: float) -> float:
    if eps == 0.0:
        return 0.0
    digest = hashlib.sha256(f"{study_id}:{model}".encode()).digest()
    seed = int.from_bytes(digest[:8], "little")
    return float(np.random.default_rng(seed).uniform(-eps, eps))


class OracleBackend(Backend):
    """Deterministic function of (study ground truth, model id, noise seed).

    Positive labels score 0.9, negative 0.1; the view model scores 0.9 for
    frontal films. Scalar outputs optionally carry uniform noise in
    [-eps, +eps], seeded per (study, model) so repeat calls agree. Map
    outputs stay noise-free: lung_seg reuses the stub geometry and ptx_seg
    fills the labeled lung quadrant for positive studies.
    """

    def __init__(self, oracles: dict[str, OracleRecord], noise_eps: float = 0.0):
        self._oracles = dict(oracles)
        self._eps = float(noise_eps)

    def _scalar(self, value: float, study_id: str, model: str) -> np.ndarray:
        return np.array([min(1.0, max(0.0, value + _noise(study_id, model, self._eps)))])

    def infer(self, model: str, image: ImageGray, study_id: str | None = None) -> np.ndarray:
        if model not in MODEL_IDS:
            raise ModelUnknown(f"unknown model id {model!r}")
        if study_id is None or study_id not in self._oracles:
            raise MissingOracle(f"no oracle record for study {study_id!r}")
        rec = self._oracles[study_id]
        if model == "view":
            return self._scalar(0.9 if rec.view in FRONTAL_VIEWS else 0.1, study_id, model)
        if model in ("ptx_full", "ptx_patch"):
            return self._scalar(0.9 if rec.pneumothorax else 0.1, study_id, model)
        if model == "tube":
            if not rec.chest_tube:
                pair = (0.1, 0.1)
            elif rec.tube_type == "standard":
                pair = (0.9, 0.1)
            elif rec.tube_type == "pigtail":
                pair = (0.1, 0.9)
            else:  # tube present, type unknown
                pair = (0.9, 0.9)
            s = self._scalar(pair[0], study_id, model + ":standard")
            p = self._scalar(pair[1], study_id, model + ":pigtail")
            return np.array([s[0], p[0]])
        if model == "lung_seg":
            return stub_lung_map(image.width, image.height)
        # ptx_seg
        out = np.zeros(image.pixels.shape)
        if rec.pneumothorax:
            out[self._quadrant(rec.location, image.width, image.height)] = 1.0
        return out

    @staticmethod
    def _quadrant(location: str | None, width: int, height: int) -> tuple[slice, slice]:
        """Row/col slices of a lung quadrant within the stub geometry."""
        loc = location if location in PTX_LOCATIONS else "right_apex"
        image_left, image_right = stub_lung_rects(width, height)
        lung = image_left if loc.startswith("right") else image_right  # patient right = image left
        mid = lung.y0 + lung.h // 2
        rows = slice(lung.y0, mid) if loc.endswith("apex") else slice(mid, lung.y1)
        return rows, slice(lung.x0, lung.x1)


class RecordingBackend(Backend):
    """Wrapper that logs every call; lets tests assert stage routing."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.calls: list[tuple[str, int, int, str | None]] = []  # (model, h, w, study_id)

    def infer(self, model: str, image: ImageGray, study_id: str | None = None) -> np.ndarray:
        self.calls.append((model, image.height, image.width, study_id))
        return self.inner.infer(model, image, study_id)

    def calls_for(self, model: str) -> list[tuple[str, int, int, str | None]]:
        return [c for c in self.calls if c[0] == model]
