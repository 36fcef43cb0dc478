"""Apical/basilar patch extraction for the region-level pneumothorax scorer.

Small pneumothoraces collect at the lung apex and base, so each lung
contributes its top and bottom bbox bands as fixed-size patches. Tags are
patient-relative: the patient's right lung is on the image left.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .imaging import ImageGray, Rect, crop, resize_bilinear
from .segpost import LungField, LungFields

APEX_BAND_FRAC = 0.4  # fraction of the lung bbox height per apex/base band
MIN_LUNG_EXTENT = 4  # px; anything smaller cannot carry a meaningful patch


class DegenerateLung(ValueError):
    """A lung bbox is too small to cut patches from."""


class PatchTag(str, Enum):
    RIGHT_APEX = "right_apex"
    LEFT_APEX = "left_apex"
    RIGHT_BASE = "right_base"
    LEFT_BASE = "left_base"


PATCH_ORDER = (PatchTag.RIGHT_APEX, PatchTag.LEFT_APEX, PatchTag.RIGHT_BASE, PatchTag.LEFT_BASE)


@dataclass(frozen=True)
class Patch:
    tag: PatchTag
    source_rect: Rect  # original-image coordinates
    image: ImageGray  # resized to out_size x out_size


def _band_rects(lung: LungField, imgw: int, imgh: int) -> tuple[Rect, Rect]:
    b = lung.bbox
    if b.w < MIN_LUNG_EXTENT or b.h < MIN_LUNG_EXTENT:
        raise DegenerateLung(f"lung bbox {b} smaller than {MIN_LUNG_EXTENT}px")
    band = int(round(APEX_BAND_FRAC * b.h))
    apex = Rect(b.x0, b.y0, b.w, band).clamped(imgw, imgh)
    base = Rect(b.x0, b.y0 + b.h - band, b.w, band).clamped(imgw, imgh)
    return apex, base


def extract_patches(img: ImageGray, lf: LungFields, out_size: int = 224) -> list[Patch]:
    """Cut the four patient-relative patches, in fixed order.

    Order is [right apex, left apex, right base, left base]. Each patch is
    the top or bottom 40% band of its lung bbox, clamped to the image, then
    resized to out_size x out_size.
    """
    if out_size < 8:
        raise ValueError(f"out_size must be >= 8, got {out_size}")
    r_apex, r_base = _band_rects(lf.patient_right, img.width, img.height)
    l_apex, l_base = _band_rects(lf.patient_left, img.width, img.height)
    rects = {
        PatchTag.RIGHT_APEX: r_apex,
        PatchTag.LEFT_APEX: l_apex,
        PatchTag.RIGHT_BASE: r_base,
        PatchTag.LEFT_BASE: l_base,
    }
    return [
        Patch(tag, rects[tag], resize_bilinear(crop(img, rects[tag]), out_size, out_size))
        for tag in PATCH_ORDER
    ]
