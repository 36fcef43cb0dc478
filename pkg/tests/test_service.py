import json

import pytest
from fastapi.testclient import TestClient

from ptxtriage.service import create_app
from ptxtriage.store import Store
from tests.conftest import synthetic_dataset


@pytest.fixture
def client(tmp_path):
    manifest, missed = synthetic_dataset(
        tmp_path, n_missed=3, n_aware_no_tube=1, n_tube_pos=2, n_tube_neg=1, n_normal=4, n_lateral=1
    )
    store = Store(tmp_path / "data")
    ui_dir = tmp_path / "ui"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<html><body>review ui</body></html>")
    app = create_app(store, ui_dir=ui_dir)
    with TestClient(app) as c:
        c.manifest_path = str(manifest)
        c.missed = missed
        yield c
    store.close()


def ingest_and_run(client, backend="oracle"):
    r = client.post("/v1/manifest", json={"path": client.manifest_path})
    assert r.status_code == 200
    r = client.post("/v1/batch", json={"backend": backend})
    assert r.status_code == 200
    return r.json()


class TestManifest:
    def test_ingest_by_path(self, client):
        r = client.post("/v1/manifest", json={"path": client.manifest_path})
        assert r.status_code == 200
        assert r.json()["ingested"] == 12

    def test_ingest_inline_content(self, client):
        line = json.dumps({"study_id": "inline1", "image_path": "/tmp/none.pgm"})
        r = client.post("/v1/manifest", json={"content": line})
        assert r.status_code == 200
        assert r.json()["ingested"] == 1

    def test_missing_body_fields(self, client):
        assert client.post("/v1/manifest", json={}).status_code == 422

    def test_unreadable_path(self, client):
        r = client.post("/v1/manifest", json={"path": "/nope/missing.ndjson"})
        assert r.status_code == 422


class TestBatch:
    def test_run_and_worklist(self, client):
        summary = ingest_and_run(client)
        assert summary["flagged"] == 3
        r = client.get("/v1/worklist")
        assert r.status_code == 200
        body = r.json()
        assert len(body["studies"]) == 3
        scores = [s["ensemble_score"] for s in body["studies"]]
        assert scores == sorted(scores, reverse=True)
        assert body["funnel"]["flagged"] == 3

    def test_unknown_backend(self, client):
        client.post("/v1/manifest", json={"path": client.manifest_path})
        assert client.post("/v1/batch", json={"backend": "magic"}).status_code == 422

    def test_bad_config(self, client):
        client.post("/v1/manifest", json={"path": client.manifest_path})
        r = client.post("/v1/batch", json={"backend": "oracle", "config": {"nope": 1}})
        assert r.status_code == 422

    def test_status_filter(self, client):
        ingest_and_run(client)
        r = client.get("/v1/worklist", params={"status": "skipped_non_frontal"})
        assert len(r.json()["studies"]) == 1


class TestStudyDetail:
    def test_detail_payload(self, client):
        ingest_and_run(client)
        sid = client.missed[0]
        r = client.get(f"/v1/studies/{sid}")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "flagged"
        assert body["report_text"]
        assert body["result"]["scores"]["ens_abc"] > 0.5
        assert body["triage"]["flagged"] is True
        assert set(body["result"]["patch_rects"]) == {
            "right_apex",
            "left_apex",
            "right_base",
            "left_base",
        }

    def test_unknown_study(self, client):
        assert client.get("/v1/studies/ghost").status_code == 404

    def test_image_raw_and_png(self, client):
        ingest_and_run(client)
        sid = client.missed[0]
        raw = client.get(f"/v1/studies/{sid}/image")
        assert raw.status_code == 200
        assert raw.headers["content-type"].startswith("image/x-portable-graymap")
        assert raw.content.startswith(b"P5")
        png = client.get(f"/v1/studies/{sid}/image", params={"format": "png"})
        assert png.status_code == 200
        assert png.headers["content-type"] == "image/png"
        assert png.content.startswith(b"\x89PNG")


class TestAdjudication:
    def test_confirm_flow(self, client):
        ingest_and_run(client)
        sid = client.missed[0]
        r = client.post(
            f"/v1/studies/{sid}/adjudication",
            json={"decision": "confirmed_missed", "reviewer_id": "rad1", "note": "clear apex line"},
        )
        assert r.status_code == 200
        body = r.json()
        assert body["study"]["status"] == "adjudicated"
        assert body["funnel"]["confirmed"] == 1
        assert body["study"]["adjudications"][0]["note"] == "clear apex line"

    def test_stale_double_adjudication_409(self, client):
        ingest_and_run(client)
        sid = client.missed[0]
        ok = {"decision": "confirmed_missed", "reviewer_id": "rad1"}
        assert client.post(f"/v1/studies/{sid}/adjudication", json=ok).status_code == 200
        assert client.post(f"/v1/studies/{sid}/adjudication", json=ok).status_code == 409

    def test_not_flagged_409(self, client):
        ingest_and_run(client)
        normals = [s["study_id"] for s in client.get("/v1/worklist?status=processed").json()["studies"]]
        r = client.post(
            f"/v1/studies/{normals[0]}/adjudication",
            json={"decision": "not_missed", "reviewer_id": "rad1"},
        )
        assert r.status_code == 409

    def test_unknown_study_404(self, client):
        r = client.post(
            "/v1/studies/ghost/adjudication",
            json={"decision": "not_missed", "reviewer_id": "rad1"},
        )
        assert r.status_code == 404

    def test_bad_decision_422(self, client):
        ingest_and_run(client)
        sid = client.missed[0]
        r = client.post(
            f"/v1/studies/{sid}/adjudication", json={"decision": "maybe", "reviewer_id": "rad1"}
        )
        assert r.status_code == 422


class TestMetrics:
    def test_metrics_payload(self, client):
        ingest_and_run(client)
        m = client.get("/v1/metrics").json()
        assert m["funnel"]["total"] == 12
        rows = {r["method"]: r for r in m["eval"]["rows"]}
        assert rows["ens_abc"]["auc_all"] == 1.0


def test_ui_static_served(client):
    r = client.get("/ui/")
    assert r.status_code == 200
    assert "review ui" in r.text
