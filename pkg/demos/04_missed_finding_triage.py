"""End-to-end missed-pneumothorax triage on a synthetic study mix.

Generates a small dataset with planted missed findings (image-positive,
report-negative, no chest tube) among distractors, runs the batch, prints
the reviewer worklist, and adjudicates the top study - the same funnel the
service exposes over HTTP.

Run:  python3 demos/04_missed_finding_triage.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from ptxtriage import ImageGray, PipelineConfig, Store, save_pgm
from ptxtriage.backends import OracleBackend
from ptxtriage.triage import AdjudicationRecord, adjudicate

workdir = Path(tempfile.mkdtemp(prefix="ptxtriage-demo-"))
rng = np.random.default_rng(11)
image_path = workdir / "film.pgm"
image_path.write_bytes(save_pgm(ImageGray.from_array(rng.uniform(0.1, 0.9, (64, 64)))))


def study(sid, report, ptx, tube, view="AP"):
    return {
        "study_id": sid,
        "image_path": str(image_path),
        "report": report,
        "labels": {"pneumothorax": ptx, "chest_tube": tube, "view": view},
        "oracle": {"pneumothorax": ptx, "chest_tube": tube, "view": view,
                   "tube_type": "standard" if tube else None,
                   "location": "right_apex" if ptx else None},
    }


rows = [
    study("missed-01", "Lungs are clear. No acute abnormality.", True, False),
    study("missed-02", "No pneumothorax. Heart size normal.", True, False),
    study("aware-01", "Small right apical pneumothorax.", True, False),
    study("tubed-01", "Pneumothorax with chest tube in place.", True, True),
    study("normal-01", "No pneumothorax.", False, False),
    study("normal-02", "Clear lungs.", False, False),
    study("lateral-01", "Lateral view.", False, False, view="LATERAL"),
]
manifest = workdir / "manifest.ndjson"
manifest.write_text("\n".join(json.dumps(r) for r in rows))

with Store(workdir / "data") as store:
    print("ingest:", store.ingest_manifest(manifest).to_json())
    backend = OracleBackend(store.oracle_records(), noise_eps=0.02)
    summary = store.run_batch(backend, PipelineConfig(), progress_every=0)
    print("batch :", summary.to_json())
    print()
    print("reviewer worklist (potential missed pneumothorax):")
    for row in store.worklist("flagged"):
        print(f"  {row['study_id']:<10} ensemble={row['ensemble_score']:.3f} "
              f"tube={row['tube']['any']:.3f} report_positive={row['nlp']['positive']}")

    top = store.worklist("flagged")[0]["study_id"]
    adjudicate(
        top,
        AdjudicationRecord(study_id=top, decision="confirmed_missed",
                           reviewer_id="demo-radiologist", note="lung edge visible at the apex"),
        store,
    )
    print()
    print(f"adjudicated {top} as confirmed_missed")
    print("funnel:", store.funnel())
