"""Inference wire protocol and the backend-facing validation layer.

Tensor payloads travel as base64-encoded little-endian IEEE-754 binary32,
row-major. Backend outputs never enter the pipeline unchecked: NaN or a
shape mismatch is a hard protocol error, while merely out-of-range values
are clamped to [0, 1] with a logged warning (robustness at the inference
edge beats rejecting an entire study).
"""

from __future__ import annotations

import base64
import logging

import numpy as np

from ..imaging import ImageGray
from ..segpost import ProbMap

logger = logging.getLogger(__name__)

ENCODING = "f32le-b64"

# The closed model set: X-ray view gate, lung segmentation, the full-image /
# patch / segmentation pneumothorax scorers, and the chest-tube classifier.
SCALAR_MODELS = {"view": 1, "ptx_full": 1, "ptx_patch": 1, "tube": 2}
MAP_MODELS = frozenset({"lung_seg", "ptx_seg"})
MODEL_IDS = frozenset(SCALAR_MODELS) | MAP_MODELS


class BackendUnavailable(RuntimeError):
    """The backend cannot be reached or failed server-side."""


class ProtocolError(ValueError):
    """A response violates the wire contract (shape, encoding, NaN)."""


class ModelUnknown(ValueError):
    """Model id outside the closed set."""


class MissingOracle(LookupError):
    """Oracle backend asked about a study it has no ground truth for."""


def encode_f32(values: np.ndarray) -> str:
    """Row-major little-endian float32, standard base64 with padding."""
    return base64.b64encode(np.ascontiguousarray(values, dtype="<f4").tobytes()).decode("ascii")


def decode_f32(data: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as exc:
        raise ProtocolError(f"payload is not valid base64: {exc}") from None
    if len(raw) % 4:
        raise ProtocolError(f"payload length {len(raw)} is not a multiple of 4")
    return np.frombuffer(raw, dtype="<f4").astype(np.float64)


def make_request(model: str, img: ImageGray) -> dict:
    return {
        "model": model,
        "shape": [img.height, img.width],
        "encoding": ENCODING,
        "data": encode_f32(img.pixels),
    }


class Backend:
    """Uniform inference interface.

    `infer` returns the raw output array: shape (1,) for probability models,
    (2,) for the chest-tube pair, or (h, w) for map models. `study_id` is
    optional call context; the oracle backend keys its ground truth on it
    and every other backend ignores it.
    """

    def infer(self, model: str, image: ImageGray, study_id: str | None = None) -> np.ndarray:
        raise NotImplementedError


def _check_model(model: str) -> None:
    if model not in MODEL_IDS:
        raise ModelUnknown(f"unknown model id {model!r}")


def _sanitize(out: np.ndarray, model: str) -> np.ndarray:
    if not np.isfinite(out).all():
        raise ProtocolError(f"{model}: non-finite values in backend output")
    lo, hi = float(out.min()), float(out.max())
    if lo < 0.0 or hi > 1.0:
        logger.warning("%s: clamping backend output range [%g, %g] to [0, 1]", model, lo, hi)
        out = np.clip(out, 0.0, 1.0)
    return out


def infer_scalar(
    backend: Backend, model: str, img: ImageGray, study_id: str | None = None
) -> float | tuple[float, float]:
    """Run a scalar-output model; "tube" yields a (standard, pigtail) pair."""
    _check_model(model)
    if model not in SCALAR_MODELS:
        raise ValueError(f"{model!r} is not a scalar-output model")
    n = SCALAR_MODELS[model]
    out = np.asarray(backend.infer(model, img, study_id), dtype=np.float64)
    if out.shape != (n,):
        raise ProtocolError(f"{model}: expected shape [{n}], got {list(out.shape)}")
    out = _sanitize(out, model)
    if n == 1:
        return float(out[0])
    return float(out[0]), float(out[1])


def infer_map(backend: Backend, model: str, img: ImageGray, study_id: str | None = None) -> ProbMap:
    """Run a map-output model; the map must match the input dimensions."""
    _check_model(model)
    if model not in MAP_MODELS:
        raise ValueError(f"{model!r} is not a map-output model")
    out = np.asarray(backend.infer(model, img, study_id), dtype=np.float64)
    if out.shape != img.pixels.shape:
        raise ProtocolError(
            f"{model}: expected map shape {list(img.pixels.shape)}, got {list(out.shape)}"
        )
    return ProbMap(_sanitize(out, model))
