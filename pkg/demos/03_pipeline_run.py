"""Run the full image pipeline on one study and inspect the result.

The oracle backend answers from a planted ground-truth record, so the demo
shows the real stage flow (view gate, lung crop, methods A/B/C, ensembles,
tube classifier) with predictable numbers and no trained weights.

Run:  python3 demos/03_pipeline_run.py
"""

import json
import tempfile
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from ptxtriage import ImageGray, PipelineConfig, run_study, save_pgm
from ptxtriage.backends import OracleBackend, OracleRecord

workdir = Path(tempfile.mkdtemp(prefix="ptxtriage-demo-"))
film = ImageGray.from_array(np.random.default_rng(3).uniform(0.1, 0.9, (96, 96)))
image_path = workdir / "study.pgm"
image_path.write_bytes(save_pgm(film))

study = SimpleNamespace(study_id="demo-001", image_path=str(image_path))
backend = OracleBackend(
    {"demo-001": OracleRecord(pneumothorax=True, chest_tube=False, view="AP", location="left_apex")}
)

result = run_study(study, backend, PipelineConfig())
print(json.dumps(result.to_json(), indent=2))
print()
print(f"method A (full image)   : {result.scores.a_full:.3f}")
print(f"method B (patch max)    : {result.scores.b_patch:.3f}")
print(f"method C (segmentation) : {result.scores.c_seg:.3f}")
print(f"ensemble A+C            : {result.scores.ens_ac:.3f}")
print(f"ensemble A+B+C          : {result.scores.ens_abc:.3f}")
print(f"chest tube (any)        : {result.tube.any:.3f}")
