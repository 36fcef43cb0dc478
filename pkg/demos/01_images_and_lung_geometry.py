"""Walk through the pixel layer: PGM round-trips, resizing, lung geometry.

Builds a synthetic chest film, pushes it through the lung segmentation stub,
and shows how the probability map becomes anatomy-tagged lung fields, a crop
box, and the four apical/basilar patches.

Run:  python3 demos/01_images_and_lung_geometry.py
"""

import numpy as np

from ptxtriage import (
    ImageGray,
    crop,
    extract_lung_fields,
    extract_patches,
    load_pgm,
    lung_crop_box,
    resize_bilinear,
    save_pgm,
)
from ptxtriage.backends import StubBackend, infer_map

rng = np.random.default_rng(42)
film = ImageGray.from_array(rng.uniform(0.1, 0.9, (128, 128)))

# --- file round-trip -------------------------------------------------------
encoded = save_pgm(film)
decoded = load_pgm(encoded)
print(f"PGM round-trip: {len(encoded)} bytes, "
      f"max abs error {np.abs(decoded.pixels - film.pixels).max():.4f} (8-bit quantization)")

# --- resize with the fixed pixel-center convention -------------------------
small = resize_bilinear(film, 64, 64)
print(f"resized {film.width}x{film.height} -> {small.width}x{small.height}, "
      f"range [{small.pixels.min():.3f}, {small.pixels.max():.3f}] stays inside the input range")

# --- lung fields from a segmentation map -----------------------------------
lung_map = infer_map(StubBackend(), "lung_seg", film)
fields = extract_lung_fields(lung_map)
print(f"patient right lung bbox: {fields.patient_right.bbox}")
print(f"patient left  lung bbox: {fields.patient_left.bbox}")
print(f"degraded fallback used: {fields.degraded}")

box = lung_crop_box(fields, 0.05, imgw=film.width, imgh=film.height)
lung_view = crop(film, box)
print(f"lung crop box with 5% margin: {box} -> {lung_view.width}x{lung_view.height} crop")

# --- the four region patches ------------------------------------------------
for patch in extract_patches(film, fields, out_size=64):
    print(f"  {patch.tag.value:<11} from {patch.source_rect} -> {patch.image.width}x{patch.image.height}")
