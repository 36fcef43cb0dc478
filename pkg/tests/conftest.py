"""Shared test fixtures: synthetic studies, lung geometry, result builders."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from ptxtriage.imaging import ImageGray, Rect, save_pgm
from ptxtriage.pipeline import Scores, StudyResult, TubeScores
from ptxtriage.segpost import BinaryMask, LungField, LungFields


def make_image(width=64, height=64, seed=0) -> ImageGray:
    rng = np.random.default_rng(seed)
    return ImageGray.from_array(rng.uniform(0.05, 0.95, (height, width)))


def make_lung_fields(right: Rect, left: Rect, width: int, height: int, degraded=False) -> LungFields:
    def field(r: Rect) -> LungField:
        bits = np.zeros((height, width), dtype=bool)
        bits[r.y0 : r.y1, r.x0 : r.x1] = True
        return LungField(BinaryMask(bits), r)

    return LungFields(field(right), field(left), right.union(left), degraded=degraded)


def make_result(
    study_id="s",
    a=0.9,
    b=0.9,
    c=0.9,
    tube=0.1,
    frontal=True,
    view=0.9,
) -> StudyResult:
    if not frontal:
        return StudyResult(
            study_id=study_id,
            status="non_frontal",
            view_score=view,
            frontal=False,
            skip_reason="non-frontal",
        )
    member = {"A": a, "B": b, "C": c}
    return StudyResult(
        study_id=study_id,
        status="ok",
        view_score=view,
        frontal=True,
        scores=Scores(
            a_full=a,
            b_patch=b,
            b_per_patch={"right_apex": b, "left_apex": b / 2, "right_base": b / 2, "left_base": b / 2},
            c_seg=c,
            ens_ac=(a + c) / 2,
            ens_abc=(a + b + c) / 3,
        ),
        tube=TubeScores(standard=tube, pigtail=tube / 2),
    )


def synthetic_dataset(
    root: Path,
    n_missed=10,
    n_aware_no_tube=20,
    n_tube_pos=30,
    n_tube_neg=20,
    n_normal=100,
    n_lateral=20,
    image_size=64,
):
    """Write PGM images + a manifest mirroring a triage-shaped study mix.

    Planted missed findings are pneumothorax-positive with a clean report
    and no tube; distractors cover reported pneumothorax (with and without
    tubes), tube-only studies, normals, and lateral views. Returns the
    manifest path and the planted missed study ids.
    """
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)
    image_paths = []
    for i in range(4):
        img = ImageGray.from_array(rng.uniform(0.05, 0.95, (image_size, image_size)))
        path = root / f"img{i}.pgm"
        path.write_bytes(save_pgm(img))
        image_paths.append(str(path))

    lines = []
    missed_ids = []
    counter = 0

    def add(prefix, report, ptx, tube, tube_type=None, view="AP", location=None):
        nonlocal counter
        sid = f"{prefix}{counter:04d}"
        counter += 1
        lines.append(
            {
                "study_id": sid,
                "image_path": image_paths[counter % len(image_paths)],
                "report": report,
                "labels": {
                    "pneumothorax": ptx,
                    "chest_tube": tube,
                    "tube_type": tube_type,
                    "view": view,
                },
                "oracle": {
                    "pneumothorax": ptx,
                    "chest_tube": tube,
                    "tube_type": tube_type,
                    "view": view,
                    "location": location,
                },
            }
        )
        return sid

    for _ in range(n_missed):
        missed_ids.append(
            add("missed", "Lungs are clear. No acute abnormality.", True, False, location="right_apex")
        )
    for _ in range(n_aware_no_tube):
        add("aware", "Small left apical pneumothorax.", True, False, location="left_apex")
    for i in range(n_tube_pos):
        ttype = "standard" if i % 2 == 0 else "pigtail"
        add("tubed", "Right pneumothorax with chest tube in place.", True, True, tube_type=ttype)
    for i in range(n_tube_neg):
        ttype = "standard" if i % 2 == 0 else "pigtail"
        add("drain", "Pneumothorax has resolved. Chest tube remains.", False, True, tube_type=ttype)
    for _ in range(n_normal):
        add("normal", "No pneumothorax. Heart size normal.", False, False)
    for _ in range(n_lateral):
        add("lateral", "Lateral view. Lungs clear.", False, False, view="LATERAL")

    manifest = root / "manifest.ndjson"
    manifest.write_text("\n".join(json.dumps(l) for l in lines) + "\n")
    return manifest, missed_ids


@pytest.fixture
def image64():
    return make_image()


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {name}: {'PASS' if report.passed else 'FAIL'}")
