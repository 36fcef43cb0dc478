"""Record live API responses into JSON fixtures for the UI contract tests.

Run from the repository root after any API change:

    python3 frontend/tests/record_fixtures.py

The UI tests replay these payloads through a fixture service, which keeps
the contract honest: everything the UI renders must come verbatim from
responses the real service produced.
"""

import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT / "tests"))

from fastapi.testclient import TestClient  # noqa: E402

from conftest import synthetic_dataset  # noqa: E402
from ptxtriage.service import create_app  # noqa: E402
from ptxtriage.store import Store  # noqa: E402

OUT = Path(__file__).parent / "fixtures"


def dump(name: str, payload) -> None:
    OUT.mkdir(exist_ok=True)
    (OUT / name).write_text(json.dumps(payload, indent=2) + "\n")
    print(f"wrote fixtures/{name}")


def main() -> None:
    tmp = Path(tempfile.mkdtemp(prefix="ptxtriage-fixtures-"))
    manifest, _ = synthetic_dataset(
        tmp, n_missed=3, n_aware_no_tube=1, n_tube_pos=2, n_tube_neg=1, n_normal=3, n_lateral=1
    )
    with Store(tmp / "data") as store:
        client = TestClient(create_app(store))
        assert client.post("/v1/manifest", json={"path": str(manifest)}).status_code == 200
        # noise makes the score ordering in the worklist non-trivial
        assert (
            client.post("/v1/batch", json={"backend": "oracle", "noise_eps": 0.05}).status_code
            == 200
        )

        worklist = client.get("/v1/worklist").json()
        dump("worklist.json", worklist)

        top = worklist["studies"][0]["study_id"]
        dump("study_detail.json", client.get(f"/v1/studies/{top}").json())

        body = {"decision": "confirmed_missed", "reviewer_id": "rad1", "note": "apex lung edge"}
        first = client.post(f"/v1/studies/{top}/adjudication", json=body)
        assert first.status_code == 200
        dump("adjudication_response.json", first.json())

        second = client.post(f"/v1/studies/{top}/adjudication", json=body)
        assert second.status_code == 409
        dump("adjudication_conflict.json", {"status": 409, "body": second.json()})

        dump("worklist_after.json", client.get("/v1/worklist").json())


if __name__ == "__main__":
    main()
