import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptxtriage.imaging import save_pgm
from ptxtriage.pipeline import PipelineConfig, StudyResult
from ptxtriage.report_nlp import classify_report
from ptxtriage.store import Store
from ptxtriage.triage import (
    AdjudicationRecord,
    IncompleteResult,
    NotFlagged,
    UnknownStudy,
    adjudicate,
    decide,
)
from tests.conftest import make_image, make_result

NLP_POS = classify_report("Moderate pneumothorax.")
NLP_NEG = classify_report("Lungs clear.")
CFG = PipelineConfig()


class TestDecide:
    def test_flagged_case(self):
        d = decide(make_result(a=0.9, b=0.9, c=0.9, tube=0.1), NLP_NEG, CFG)
        assert d.flagged
        assert d.reasons == {
            "frontal": True,
            "nlp_negative": True,
            "tube_negative": True,
            "ptx_positive": True,
        }
        assert d.thresholds_used == {"ptx_threshold": 0.5, "tube_threshold": 0.5}
        assert d.ensemble_score == pytest.approx(0.9)

    def test_tube_presence_blocks_flag(self):
        # a chest tube means clinical awareness already exists
        d = decide(make_result(a=0.9, b=0.9, c=0.9, tube=0.8), NLP_NEG, CFG)
        assert not d.flagged
        assert d.reasons["tube_negative"] is False

    def test_nlp_positive_blocks_flag(self):
        d = decide(make_result(a=0.9, b=0.9, c=0.9, tube=0.1), NLP_POS, CFG)
        assert not d.flagged
        assert d.reasons["nlp_negative"] is False

    @pytest.mark.parametrize(
        "frontal,nlp_neg,tube_neg,ptx_pos",
        list(itertools.product([True, False], repeat=4)),
    )
    def test_truth_table(self, frontal, nlp_neg, tube_neg, ptx_pos):
        result = make_result(
            a=0.9 if ptx_pos else 0.1,
            b=0.9 if ptx_pos else 0.1,
            c=0.9 if ptx_pos else 0.1,
            tube=0.1 if tube_neg else 0.9,
            frontal=frontal,
        )
        d = decide(result, NLP_NEG if nlp_neg else NLP_POS, CFG)
        assert d.flagged == (frontal and nlp_neg and tube_neg and ptx_pos)
        assert d.flagged == all(d.reasons.values())

    def test_threshold_boundary_inclusive(self):
        d = decide(make_result(a=0.5, b=0.5, c=0.5, tube=0.1), NLP_NEG, CFG)
        assert d.reasons["ptx_positive"] is True
        d = decide(make_result(a=0.9, b=0.9, c=0.9, tube=0.5), NLP_NEG, CFG)
        assert d.reasons["tube_negative"] is False  # tube.any < threshold is strict

    def test_configured_ensemble_members(self):
        cfg = PipelineConfig(ensemble_members=("A", "C"))
        d = decide(make_result(a=0.8, b=0.0, c=0.6, tube=0.1), NLP_NEG, cfg)
        assert d.ensemble_score == pytest.approx(0.7)
        assert d.ensemble_members == ("A", "C")
        assert d.flagged

    def test_incomplete_result(self):
        errored = StudyResult(study_id="s", status="error", error="boom", error_stage="load")
        with pytest.raises(IncompleteResult):
            decide(errored, NLP_NEG, CFG)

    def test_non_frontal_never_flagged(self):
        d = decide(make_result(frontal=False), NLP_NEG, CFG)
        assert not d.flagged
        assert d.reasons["frontal"] is False
        assert d.ensemble_score is None

    @given(
        st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
        st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
    )
    @settings(max_examples=120)
    def test_threshold_monotonicity(self, a, b, c, tube, p1, p2, t1, t2):
        p_lo, p_hi = sorted((p1, p2))
        t_lo, t_hi = sorted((t1, t2))
        result = make_result(a=a, b=b, c=c, tube=tube)
        flag = lambda p, t: decide(
            result, NLP_NEG, PipelineConfig(ptx_threshold=p, tube_threshold=t)
        ).flagged
        # raising the ptx threshold can only unflag
        assert flag(p_hi, t_lo) <= flag(p_lo, t_lo)
        # raising the tube threshold can only flag more
        assert flag(p_lo, t_lo) <= flag(p_lo, t_hi)


@pytest.fixture
def flagged_store(tmp_path):
    img = make_image(32, 32)
    (tmp_path / "img.pgm").write_bytes(save_pgm(img))
    lines = [
        {
            "study_id": sid,
            "image_path": str(tmp_path / "img.pgm"),
            "report": report,
            "oracle": {"pneumothorax": ptx, "chest_tube": False, "view": "AP"},
        }
        for sid, report, ptx in [
            ("flag1", "Lungs clear.", True),
            ("flag2", "No acute disease.", True),
            ("clean", "No pneumothorax.", False),
        ]
    ]
    manifest = tmp_path / "m.ndjson"
    manifest.write_text("\n".join(json.dumps(l) for l in lines))
    store = Store(tmp_path / "data")
    store.ingest_manifest(manifest)
    from ptxtriage.backends import OracleBackend

    store.run_batch(OracleBackend(store.oracle_records()), PipelineConfig(), progress_every=0)
    yield store
    store.close()


class TestAdjudicate:
    def test_confirm_flagged(self, flagged_store):
        before = flagged_store.funnel()["confirmed"]
        status = adjudicate(
            "flag1",
            AdjudicationRecord(study_id="flag1", decision="confirmed_missed", reviewer_id="rad1"),
            flagged_store,
        )
        assert status == "adjudicated"
        assert flagged_store.get("flag1").status == "adjudicated"
        assert flagged_store.funnel()["confirmed"] == before + 1

    def test_unflagged_rejected(self, flagged_store):
        with pytest.raises(NotFlagged):
            adjudicate(
                "clean",
                AdjudicationRecord(study_id="clean", decision="not_missed", reviewer_id="rad1"),
                flagged_store,
            )

    def test_unknown_study(self, flagged_store):
        with pytest.raises(UnknownStudy):
            adjudicate(
                "ghost",
                AdjudicationRecord(study_id="ghost", decision="not_missed", reviewer_id="rad1"),
                flagged_store,
            )

    def test_supersede_keeps_history(self, flagged_store):
        rec = lambda decision: AdjudicationRecord(
            study_id="flag1", decision=decision, reviewer_id="rad1"
        )
        adjudicate("flag1", rec("confirmed_missed"), flagged_store)
        adjudicate("flag1", rec("not_missed"), flagged_store)
        state = flagged_store.get("flag1")
        assert len(state.adjudications) == 2
        assert state.current_adjudication.decision == "not_missed"
        assert flagged_store.funnel()["confirmed"] == 0

    def test_invalid_decision_value(self):
        with pytest.raises(ValueError):
            AdjudicationRecord(study_id="x", decision="maybe", reviewer_id="r")
