// Thin typed client for the review service. Every error carries the HTTP
// status so callers can treat conflicts (409) differently from outages.

import type { AdjudicationResponse, Decision, StudyDetail, WorklistResponse } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  let res: Response;
  try {
    res = await fetch(path, init);
  } catch (err) {
    throw new ApiError(0, `service unreachable: ${String(err)}`);
  }
  if (!res.ok) {
    let detail = `${res.status}`;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export function getWorklist(status: string): Promise<WorklistResponse> {
  const qs = status ? `?status=${encodeURIComponent(status)}` : "?status=all";
  return request<WorklistResponse>(`/v1/worklist${qs}`);
}

export function getStudy(studyId: string): Promise<StudyDetail> {
  return request<StudyDetail>(`/v1/studies/${encodeURIComponent(studyId)}`);
}

export function submitAdjudication(
  studyId: string,
  decision: Decision,
  reviewerId: string,
  note: string,
): Promise<AdjudicationResponse> {
  return request<AdjudicationResponse>(`/v1/studies/${encodeURIComponent(studyId)}/adjudication`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ decision, reviewer_id: reviewerId, note }),
  });
}

export function imageUrl(studyId: string): string {
  return `/v1/studies/${encodeURIComponent(studyId)}/image?format=png`;
}
