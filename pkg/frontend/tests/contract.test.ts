// Contract tests against the fixture service: the full reviewer flow the
// acceptance criteria describe, driven through the real API client and
// state transitions, asserting on rendered output.

import { beforeEach, describe, expect, it } from "vitest";

import { ApiError, getStudy, getWorklist, submitAdjudication } from "../src/api.js";
import { renderApp, renderDetail, renderWorklist } from "../src/render.js";
import {
  applyAdjudication,
  applyDetail,
  applyError,
  applyWorklist,
  initialState,
  reviewCounts,
  type AppState,
} from "../src/state.js";
import { FixtureService, fixtures } from "./fixture_service.js";

let service: FixtureService;

beforeEach(() => {
  service = new FixtureService();
  service.install();
});

describe("worklist contract", () => {
  it("renders flagged studies in the service's score order, verbatim", async () => {
    const payload = await getWorklist("flagged");
    const state = applyWorklist({ ...initialState }, payload);
    const html = renderWorklist(state);

    const scores = payload.studies.map((s) => s.ensemble_score ?? -1);
    expect(scores).toEqual([...scores].sort((a, b) => b - a)); // server sorted...
    const ids = [...html.matchAll(/data-study="([^"]+)"/g)].map((m) => m[1]);
    expect(ids).toEqual(payload.studies.map((s) => s.study_id)); // ...UI preserved
    for (const s of payload.studies) {
      expect(html).toContain((s.ensemble_score ?? 0).toFixed(3));
    }
  });
});

describe("adjudication contract", () => {
  async function openTop(): Promise<AppState> {
    const state = applyWorklist({ ...initialState }, await getWorklist("flagged"));
    const top = state.rows[0]!.study_id;
    return applyDetail(state, await getStudy(top));
  }

  it("confirming updates status through the API and bumps the confirmed counter", async () => {
    let state = await openTop();
    const sid = state.detail!.study_id;
    const before = reviewCounts(state);

    const resp = await submitAdjudication(sid, "confirmed_missed", "rad1", "apex lung edge");
    state = applyAdjudication(state, resp);

    expect(service.requests.some((r) => r.method === "POST" && r.path.includes(sid))).toBe(true);
    expect(state.detail!.status).toBe("adjudicated");
    expect(state.rows.find((r) => r.study_id === sid)!.status).toBe("adjudicated");
    const after = reviewCounts(state);
    expect(after.confirmed).toBe(before.confirmed + 1);
    expect(after.remaining).toBe(before.remaining - 1);
    expect(renderDetail(state)).toMatch(/data-decision="confirmed_missed" disabled/);
  });

  it("a stale double-adjudication surfaces the 409 without local mutation", async () => {
    let state = await openTop();
    const sid = state.detail!.study_id;
    state = applyAdjudication(
      state,
      await submitAdjudication(sid, "confirmed_missed", "rad1", "first decision"),
    );
    const snapshot = JSON.stringify({ rows: state.rows, detail: state.detail, funnel: state.funnel });

    let conflict: ApiError | null = null;
    try {
      await submitAdjudication(sid, "confirmed_missed", "rad1", "stale tab");
    } catch (err) {
      conflict = err as ApiError;
    }
    expect(conflict).toBeInstanceOf(ApiError);
    expect(conflict!.status).toBe(409);

    state = applyError(state, `conflict: ${conflict!.message}`);
    // banner appears; rows, detail, and counts are untouched
    expect(JSON.stringify({ rows: state.rows, detail: state.detail, funnel: state.funnel })).toBe(
      snapshot,
    );
    const html = renderApp(state);
    expect(html).toContain('class="banner error"');
    expect(html).toContain("conflict:");
  });

  it("reloading after a decision reproduces the adjudicated state from the server", async () => {
    let state = await openTop();
    const sid = state.detail!.study_id;
    await submitAdjudication(sid, "confirmed_missed", "rad1", "note");
    // a fresh session sees the same truth the mutation returned
    const fresh = applyDetail(
      applyWorklist({ ...initialState }, await getWorklist("flagged")),
      await getStudy(sid),
    );
    expect(fresh.detail!.status).toBe("adjudicated");
    expect(fresh.detail!.adjudications.length).toBe(1);
    expect(fresh.funnel).toEqual(fixtures.worklistAfter().funnel);
  });
});

describe("error contract", () => {
  it("unknown studies map to ApiError 404", async () => {
    await expect(getStudy("ghost")).rejects.toMatchObject({ status: 404 });
  });

  it("an unreachable service maps to ApiError status 0 and a banner", async () => {
    globalThis.fetch = (async () => {
      throw new TypeError("fetch failed");
    }) as typeof fetch;
    let err: ApiError | null = null;
    try {
      await getWorklist("flagged");
    } catch (e) {
      err = e as ApiError;
    }
    expect(err!.status).toBe(0);
    const state = applyError({ ...initialState }, err!.message);
    const html = renderApp(state);
    expect(html).toContain('class="banner error"');
    expect(html).toContain('data-action="retry"');
  });
});
