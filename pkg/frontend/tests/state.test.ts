import { describe, expect, it } from "vitest";

import {
  applyAdjudication,
  applyDetail,
  applyError,
  applyWorklist,
  backToWorklist,
  initialState,
  reviewCounts,
  visibleRows,
} from "../src/state.js";
import { fixtures } from "./fixture_service.js";

const loaded = () => applyWorklist({ ...initialState }, fixtures.worklist());

describe("applyWorklist", () => {
  it("stores rows and funnel verbatim and clears errors", () => {
    const state = applyWorklist({ ...initialState, error: "old" }, fixtures.worklist());
    expect(state.rows).toEqual(fixtures.worklist().studies);
    expect(state.funnel).toEqual(fixtures.worklist().funnel);
    expect(state.error).toBeNull();
  });
});

describe("visibleRows", () => {
  it("never reorders; only trims by score range", () => {
    const rows = loaded().rows;
    const kept = visibleRows(rows, { status: "flagged", minScore: 0, maxScore: 1 });
    expect(kept).toEqual(rows);
    const none = visibleRows(rows, { status: "flagged", minScore: 2, maxScore: null });
    expect(none).toEqual([]);
  });
});

describe("applyDetail", () => {
  it("loads the study and seeds the note from its current adjudication", () => {
    const state = applyDetail(loaded(), fixtures.studyDetail());
    expect(state.view).toBe("detail");
    expect(state.detail?.study_id).toBe(fixtures.studyDetail().study_id);
    expect(state.note).toBe("");

    const after = applyDetail(loaded(), fixtures.adjudicationResponse().study);
    expect(after.note).toBe(fixtures.adjudicationResponse().study.adjudications[0]!.note);
  });
});

describe("applyAdjudication", () => {
  it("applies the acknowledged server payload to row, detail, and funnel", () => {
    const before = applyDetail(loaded(), fixtures.studyDetail());
    const resp = fixtures.adjudicationResponse();
    const state = applyAdjudication(before, resp);
    const row = state.rows.find((r) => r.study_id === resp.study.study_id)!;
    expect(row.status).toBe("adjudicated");
    expect(row.adjudication?.decision).toBe("confirmed_missed");
    expect(state.funnel).toEqual(resp.funnel);
    expect(state.detail?.status).toBe("adjudicated");
    expect(reviewCounts(state).confirmed).toBe(resp.funnel.confirmed);
    expect(reviewCounts(state).remaining).toBe(
      state.rows.filter((r) => r.status === "flagged").length,
    );
  });

  it("leaves unrelated rows untouched", () => {
    const before = applyDetail(loaded(), fixtures.studyDetail());
    const state = applyAdjudication(before, fixtures.adjudicationResponse());
    const untouched = state.rows.filter((r) => r.study_id !== fixtures.studyDetail().study_id);
    expect(untouched).toEqual(
      loaded().rows.filter((r) => r.study_id !== fixtures.studyDetail().study_id),
    );
  });
});

describe("applyError", () => {
  it("is non-destructive: rows and detail survive", () => {
    const before = applyDetail(loaded(), fixtures.studyDetail());
    const state = applyError(before, "boom");
    expect(state.error).toBe("boom");
    expect(state.rows).toEqual(before.rows);
    expect(state.detail).toEqual(before.detail);
  });
});

describe("backToWorklist", () => {
  it("returns to the list view and drops the detail", () => {
    const state = backToWorklist(applyDetail(loaded(), fixtures.studyDetail()));
    expect(state.view).toBe("worklist");
    expect(state.detail).toBeNull();
  });
});
