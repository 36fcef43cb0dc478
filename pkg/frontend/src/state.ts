// Application state and its pure transitions. Every transition applies
// server payloads verbatim; nothing here recomputes a score, re-sorts the
// worklist, or mutates locally before the server has acknowledged.

import type {
  AdjudicationResponse,
  Funnel,
  StudyDetail,
  WorklistResponse,
  WorklistRow,
} from "./types.js";

export interface Filters {
  status: string; // served by the API; "" means flagged (the default queue)
  minScore: number | null; // display-only range filter
  maxScore: number | null;
}

export interface AppState {
  view: "worklist" | "detail";
  rows: WorklistRow[];
  funnel: Funnel | null;
  filters: Filters;
  detail: StudyDetail | null;
  note: string;
  reviewerId: string;
  error: string | null;
  notice: string | null;
  imageZoom: number;
  imageInvert: boolean;
}

export const initialState: AppState = {
  view: "worklist",
  rows: [],
  funnel: null,
  filters: { status: "flagged", minScore: null, maxScore: null },
  detail: null,
  note: "",
  reviewerId: "",
  error: null,
  notice: null,
  imageZoom: 1,
  imageInvert: false,
};

/** Score-range display filter; server ordering is preserved untouched. */
export function visibleRows(rows: WorklistRow[], filters: Filters): WorklistRow[] {
  return rows.filter((r) => {
    if (filters.minScore !== null && (r.ensemble_score ?? -1) < filters.minScore) return false;
    if (filters.maxScore !== null && (r.ensemble_score ?? -1) > filters.maxScore) return false;
    return true;
  });
}

export function applyWorklist(state: AppState, payload: WorklistResponse): AppState {
  return { ...state, rows: payload.studies, funnel: payload.funnel, error: null };
}

export function applyDetail(state: AppState, detail: StudyDetail): AppState {
  const note = detail.adjudication?.note ?? "";
  return { ...state, view: "detail", detail, note, error: null, imageZoom: 1, imageInvert: false };
}

/** Acknowledged adjudication: replace the study and counts with server truth. */
export function applyAdjudication(state: AppState, resp: AdjudicationResponse): AppState {
  const updated = resp.study;
  const rows = state.rows.map((r) => (r.study_id === updated.study_id ? toRow(updated) : r));
  return {
    ...state,
    rows,
    funnel: resp.funnel,
    detail: state.detail?.study_id === updated.study_id ? updated : state.detail,
    note: updated.adjudication?.note ?? state.note,
    error: null,
    notice: `${updated.study_id}: recorded ${updated.adjudication?.decision ?? "decision"}`,
  };
}

/** Errors are surfaced, never destructive: rows and detail stay intact. */
export function applyError(state: AppState, message: string): AppState {
  return { ...state, error: message, notice: null };
}

export function backToWorklist(state: AppState): AppState {
  return { ...state, view: "worklist", detail: null, notice: null, error: null };
}

function toRow(detail: StudyDetail): WorklistRow {
  return {
    study_id: detail.study_id,
    status: detail.status,
    flagged: detail.flagged,
    ensemble_score: detail.ensemble_score,
    ensemble_members: detail.ensemble_members,
    scores: detail.scores,
    tube: detail.tube,
    view_score: detail.view_score,
    degraded_lungs: detail.degraded_lungs,
    thresholds_used: detail.thresholds_used,
    nlp: detail.nlp,
    flagged_at: detail.flagged_at,
    adjudication: detail.adjudication,
  };
}

/** Flagged-remaining / confirmed-so-far for the header, from server data. */
export function reviewCounts(state: AppState): { remaining: number; confirmed: number } {
  return {
    remaining: state.rows.filter((r) => r.status === "flagged").length,
    confirmed: state.funnel?.confirmed ?? 0,
  };
}
