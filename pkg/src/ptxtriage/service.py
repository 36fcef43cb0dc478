"""HTTP API over the store: ingestion, batch runs, worklist, adjudication.

The service is a thin JSON boundary; all clinical logic stays in the
library modules. The reviewer UI is served as prebuilt static assets under
/ui and talks only to these endpoints.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .imaging import ImageLoadError, load_image
from .pipeline import PipelineConfig
from .store import FileUnreadable, Store, resolve_backend
from .triage import AdjudicationRecord, NotFlagged, UnknownStudy


class ManifestBody(BaseModel):
    path: str | None = None
    content: str | None = None  # inline NDJSON, mostly for tests


class BatchBody(BaseModel):
    backend: str | None = None  # "oracle" | "stub" | http(s) URL; None -> server default
    filter: dict | None = None
    config: dict | None = None
    workers: int = Field(default=1, ge=1, le=64)
    noise_eps: float = Field(default=0.0, ge=0.0, le=0.5)


class AdjudicationBody(BaseModel):
    decision: Literal["confirmed_missed", "not_missed", "indeterminate"]
    reviewer_id: str = Field(min_length=1)
    note: str = ""


def create_app(
    store: Store, ui_dir: str | Path | None = None, default_backend: str = "stub"
) -> FastAPI:
    app = FastAPI(title="ptxtriage", version="0.1.0")

    @app.post("/v1/manifest")
    def ingest_manifest(body: ManifestBody):
        path = body.path
        if body.content is not None:
            path = store.data_dir / "uploaded_manifest.ndjson"
            path.write_text(body.content, encoding="utf-8")
        if path is None:
            raise HTTPException(422, "provide either 'path' or 'content'")
        try:
            return store.ingest_manifest(path).to_json()
        except FileUnreadable as exc:
            raise HTTPException(422, str(exc)) from exc

    @app.post("/v1/batch")
    def run_batch(body: BatchBody):
        try:
            backend = resolve_backend(body.backend or default_backend, store, noise_eps=body.noise_eps)
            cfg = PipelineConfig.from_json(body.config or {})
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc
        summary = store.run_batch(
            backend, cfg, filter=body.filter, workers=body.workers, progress_every=0
        )
        return summary.to_json()

    @app.get("/v1/worklist")
    def worklist(status: str | None = Query(default="flagged")):
        if status in ("", "all"):
            status = None
        return {"studies": store.worklist(status), "funnel": store.funnel()}

    @app.get("/v1/studies/{study_id}")
    def study_detail(study_id: str):
        try:
            return store.study_detail(study_id)
        except UnknownStudy as exc:
            raise HTTPException(404, f"unknown study {study_id!r}") from exc

    @app.get("/v1/studies/{study_id}/image")
    def study_image(study_id: str, format: str | None = Query(default=None)):
        try:
            data, ctype = store.image_bytes(study_id)
        except UnknownStudy as exc:
            raise HTTPException(404, f"unknown study {study_id!r}") from exc
        except OSError as exc:
            raise HTTPException(404, f"image file unavailable: {exc}") from exc
        if format == "png" and ctype != "image/png":
            try:
                img = load_image(data)
            except ImageLoadError as exc:
                raise HTTPException(422, str(exc)) from exc
            from PIL import Image

            buf = io.BytesIO()
            Image.fromarray(np.rint(img.pixels * 255).astype(np.uint8), mode="L").save(buf, "PNG")
            return Response(content=buf.getvalue(), media_type="image/png")
        return Response(content=data, media_type=ctype)

    @app.post("/v1/studies/{study_id}/adjudication")
    def adjudicate(study_id: str, body: AdjudicationBody):
        try:
            state = store.get(study_id)
        except UnknownStudy as exc:
            raise HTTPException(404, f"unknown study {study_id!r}") from exc
        # workflow guard: the HTTP surface only adjudicates currently-flagged
        # studies, so a stale tab re-confirming an adjudicated study conflicts
        if state.status != "flagged":
            raise HTTPException(409, f"study {study_id} has status {state.status!r}, not flagged")
        record = AdjudicationRecord(
            study_id=study_id,
            decision=body.decision,
            reviewer_id=body.reviewer_id,
            note=body.note,
        )
        try:
            store.adjudicate(study_id, record)
        except NotFlagged as exc:
            raise HTTPException(409, str(exc)) from exc
        return {"study": store.study_detail(study_id), "funnel": store.funnel()}

    @app.get("/v1/metrics")
    def metrics():
        return store.metrics()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
