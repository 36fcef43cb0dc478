"""Turn raw segmentation probability maps into usable lung geometry.

Covers thresholding, connected components, left/right lung-field assignment
(radiographic convention: the patient's right lung appears on the image
left), the expanded crop box feeding the full-image scorers, and the scalar
score derived from a pneumothorax segmentation map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imaging import Rect


class EmptyMap(ValueError):
    """Probability map is empty or too small to carry lung geometry."""


@dataclass(frozen=True)
class ProbMap:
    """2-D per-pixel probabilities in [0, 1], row-major."""

    values: np.ndarray  # shape (height, width), float64

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {v.shape}")
        if v.dtype != np.float64:
            object.__setattr__(self, "values", v.astype(np.float64))
            v = self.values
        if v.size and (float(v.min()) < 0.0 or float(v.max()) > 1.0 or not np.isfinite(v).all()):
            raise ValueError("probabilities must be finite and lie in [0,1]")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class BinaryMask:
    """2-D boolean raster, row-major."""

    bits: np.ndarray  # shape (height, width), bool

    def __post_init__(self):
        b = self.bits
        if b.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {b.shape}")
        if b.dtype != np.bool_:
            object.__setattr__(self, "bits", b.astype(bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class Component:
    pixels: int
    bbox: Rect
    centroid: tuple[float, float]  # (x, y)


@dataclass(frozen=True)
class LungField:
    mask: BinaryMask
    bbox: Rect


@dataclass(frozen=True)
class LungFields:
    """Left/right lung geometry; `degraded` marks the full-halves fallback."""

    patient_right: LungField
    patient_left: LungField
    combined_bbox: Rect
    degraded: bool


def threshold_map(m: ProbMap, t: float) -> BinaryMask:
    """Binarize at threshold `t`; the comparison is inclusive (>= t)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must lie in [0,1], got {t}")
    return BinaryMask(m.values >= t)


def _labeled_components(mask: BinaryMask) -> tuple[np.ndarray, list[tuple[Component, int]]]:
    """Label 4-connected components; components come back largest first."""
    labels, n = ndimage.label(mask.bits)  # default structure is 4-connectivity
    comps: list[tuple[Component, int]] = []
    if n:
        sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=range(1, n + 1))
        slices = ndimage.find_objects(labels)
        cy, cx = np.nonzero(mask.bits)
        point_labels = labels[cy, cx]
        for i, (sl, size) in enumerate(zip(slices, sizes), start=1):
            ys, xs = sl
            bbox = Rect(int(xs.start), int(ys.start), int(xs.stop - xs.start), int(ys.stop - ys.start))
            sel = point_labels == i
            centroid = (float(cx[sel].mean()), float(cy[sel].mean()))
            comps.append((Component(int(size), bbox, centroid), i))
    comps.sort(key=lambda ci: (-ci[0].pixels, ci[0].bbox.y0, ci[0].bbox.x0))
    return labels, comps


def connected_components(mask: BinaryMask) -> list[Component]:
    """4-connected components, largest first; ties by bbox y0 then x0."""
    return [comp for comp, _ in _labeled_components(mask)[1]]


def _field_from_mask(bits: np.ndarray) -> LungField:
    ys, xs = np.nonzero(bits)
    bbox = Rect(int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1))
    return LungField(BinaryMask(bits), bbox)


def _assign_sides(a: LungField, b: LungField) -> tuple[LungField, LungField]:
    # patient's right lung sits at the smaller image x (radiographic convention);
    # keyed on the bbox center so the LungFields ordering invariant holds by
    # construction even for skewed masks
    if (a.bbox.center_x, a.bbox.x0) <= (b.bbox.center_x, b.bbox.x0):
        return a, b
    return b, a


def fallback_lung_fields(width: int, height: int) -> LungFields:
    """Degraded full-image halves; the image left half is the patient's right."""
    half = width // 2
    bits = np.zeros((height, width), dtype=bool)
    left_bits = bits.copy()
    left_bits[:, :half] = True
    right_bits = bits.copy()
    right_bits[:, half:] = True
    pr = LungField(BinaryMask(left_bits), Rect(0, 0, half, height))
    pl = LungField(BinaryMask(right_bits), Rect(half, 0, width - half, height))
    return LungFields(pr, pl, Rect(0, 0, width, height), degraded=True)


def extract_lung_fields(
    m: ProbMap,
    *,
    threshold: float = 0.5,
    min_area_frac: float = 0.01,
    split_width_frac: float = 0.6,
) -> LungFields:
    """Derive anatomy-tagged lung fields from a lung-segmentation map.

    Threshold the map, drop components smaller than `min_area_frac` of the
    image, then: two or more survivors -> the two largest are the lungs;
    exactly one survivor wider than `split_width_frac` of the image -> split
    it at the column of minimum foreground count within the middle third of
    its bbox; anything else -> degraded fallback of full-image halves. Never
    fails on a valid map, so every study gets scoreable geometry.
    """
    if m.width == 0 or m.height == 0:
        raise EmptyMap("zero-sized probability map")
    if m.width < 2 or m.height < 2:
        # even the fallback halves need one column per lung
        raise EmptyMap(f"map too small to split into halves: {m.width}x{m.height}")
    labels, labeled = _labeled_components(threshold_map(m, threshold))
    min_area = min_area_frac * m.width * m.height
    comps = [(c, lid) for c, lid in labeled if c.pixels >= min_area]

    if len(comps) >= 2:
        fields = [_field_from_mask(labels == lid) for _, lid in comps[:2]]
        pr, pl = _assign_sides(fields[0], fields[1])
        return LungFields(pr, pl, pr.bbox.union(pl.bbox), degraded=False)

    if len(comps) == 1 and comps[0][0].bbox.w > split_width_frac * m.width:
        comp, label_id = comps[0]
        comp_bits = labels == label_id
        lo = comp.bbox.x0 + comp.bbox.w // 3
        hi = comp.bbox.x0 + (2 * comp.bbox.w) // 3
        if hi >= lo:
            col_counts = comp_bits[:, lo : hi + 1].sum(axis=0)
            split_col = lo + int(np.argmin(col_counts))
            left_bits = comp_bits.copy()
            left_bits[:, split_col + 1 :] = False  # split column goes with the left piece
            right_bits = comp_bits.copy()
            right_bits[:, : split_col + 1] = False
            if left_bits.any() and right_bits.any():
                pr, pl = _assign_sides(_field_from_mask(left_bits), _field_from_mask(right_bits))
                return LungFields(pr, pl, pr.bbox.union(pl.bbox), degraded=False)

    return fallback_lung_fields(m.width, m.height)


def lung_crop_box(lf: LungFields, margin_frac: float = 0.05, *, imgw: int, imgh: int) -> Rect:
    """Union of the lung bboxes expanded by margin_frac per side, clamped."""
    if not 0.0 <= margin_frac <= 0.5:
        raise ValueError(f"margin_frac must lie in [0, 0.5], got {margin_frac}")
    union = lf.patient_right.bbox.union(lf.patient_left.bbox)
    mx = int(round(margin_frac * union.w))
    my = int(round(margin_frac * union.h))
    return Rect(union.x0 - mx, union.y0 - my, union.w + 2 * mx, union.h + 2 * my).clamped(imgw, imgh)


def seg_score(m: ProbMap) -> float:
    """Scalar pneumothorax score from a segmentation map.

    Maximum of the 3x3 mean-filtered map (zero-padded borders): single-pixel
    noise is suppressed while a small coherent region still scores near its
    peak probability.
    """
    if m.width == 0 or m.height == 0:
        raise EmptyMap("zero-sized probability map")
    padded = np.pad(m.values, 1, mode="constant")
    acc = np.zeros_like(m.values)
    for dy in range(3):
        for dx in range(3):
            acc += padded[dy : dy + m.height, dx : dx + m.width]
    return float(acc.max() / 9.0)
