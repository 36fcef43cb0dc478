// Pure HTML renderers: state in, markup out. Keeping these free of DOM and
// fetch calls makes the contract tests runnable without a browser.

import { imageUrl } from "./api.js";
import { reviewCounts, visibleRows, type AppState } from "./state.js";
import type { Mention, Rect, StudyDetail, WorklistRow } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function fmtScore(x: number | null | undefined): string {
  return x === null || x === undefined ? "—" : x.toFixed(3);
}

export function fmtTime(seconds: number | null): string {
  if (seconds === null) return "—";
  return new Date(seconds * 1000).toISOString().replace("T", " ").slice(0, 19);
}

/** Percent-based overlay box for a patch rect, relative to the image frame. */
export function overlayStyle(rect: Rect, imageSize: [number, number]): string {
  const [w, h] = imageSize;
  const pct = (v: number, total: number) => ((100 * v) / total).toFixed(2);
  return (
    `left:${pct(rect[0], w)}%;top:${pct(rect[1], h)}%;` +
    `width:${pct(rect[2], w)}%;height:${pct(rect[3], h)}%`
  );
}

/** Report text with mention spans wrapped in <mark>, offsets server-given. */
export function renderReport(text: string, mentions: Mention[]): string {
  const ordered = [...mentions].sort((a, b) => a.start - b.start);
  let out = "";
  let pos = 0;
  for (const m of ordered) {
    if (m.start < pos || m.end > text.length) continue; // defensive: bad span
    out += escapeHtml(text.slice(pos, m.start));
    out += `<mark class="mention ${m.polarity}">${escapeHtml(text.slice(m.start, m.end))}</mark>`;
    pos = m.end;
  }
  out += escapeHtml(text.slice(pos));
  return out || '<span class="empty">(empty report)</span>';
}

export function renderBanner(state: AppState): string {
  if (state.error) {
    return (
      `<div class="banner error">${escapeHtml(state.error)} ` +
      `<button data-action="retry">Retry</button></div>`
    );
  }
  if (state.notice) {
    return `<div class="banner notice">${escapeHtml(state.notice)}</div>`;
  }
  return "";
}

function statusBadge(status: string): string {
  return `<span class="status status-${escapeHtml(status)}">${escapeHtml(status)}</span>`;
}

export function renderWorklist(state: AppState): string {
  const rows = visibleRows(state.rows, state.filters);
  const counts = reviewCounts(state);
  const options = ["flagged", "adjudicated", "processed", "errored", "skipped_non_frontal", "all"]
    .map(
      (s) =>
        `<option value="${s}"${s === state.filters.status ? " selected" : ""}>${s}</option>`,
    )
    .join("");
  const body = rows.length
    ? rows
        .map(
          (r) => `
      <tr data-study="${escapeHtml(r.study_id)}">
        <td class="mono">${escapeHtml(r.study_id)}</td>
        <td class="num">${fmtScore(r.ensemble_score)}</td>
        <td class="num">${fmtScore(r.tube?.any ?? null)}</td>
        <td>${statusBadge(r.status)}</td>
        <td>${fmtTime(r.flagged_at)}</td>
        <td>${r.adjudication ? escapeHtml(r.adjudication.decision) : "—"}</td>
      </tr>`,
        )
        .join("")
    : `<tr><td colspan="6" class="empty">No studies match the current filters.</td></tr>`;
  return `
  <section class="worklist">
    <header>
      <h1>Potential missed pneumothorax</h1>
      <div class="counts">flagged remaining: <b>${counts.remaining}</b> · confirmed so far: <b>${counts.confirmed}</b></div>
    </header>
    <div class="filters">
      <label>status <select data-filter="status">${options}</select></label>
      <label>score ≥ <input data-filter="minScore" type="number" step="0.01" min="0" max="1"
        value="${state.filters.minScore ?? ""}"></label>
      <label>score ≤ <input data-filter="maxScore" type="number" step="0.01" min="0" max="1"
        value="${state.filters.maxScore ?? ""}"></label>
      <button data-action="reload">Reload</button>
    </div>
    <table>
      <thead><tr>
        <th>study</th><th>ensemble</th><th>tube</th><th>status</th><th>flagged at</th><th>decision</th>
      </tr></thead>
      <tbody>${body}</tbody>
    </table>
  </section>`;
}

function renderScorePanel(d: StudyDetail): string {
  const s = d.scores;
  const perPatch = d.scores
    ? Object.entries(d.scores.b_per_patch)
        .map(([tag, v]) => `<tr><td class="sub">B · ${escapeHtml(tag)}</td><td class="num">${fmtScore(v)}</td></tr>`)
        .join("")
    : "";
  const th = d.thresholds_used;
  return `
  <table class="scores">
    <tr><td>A · full image</td><td class="num">${fmtScore(s?.a_full)}</td></tr>
    <tr><td>B · patch max</td><td class="num">${fmtScore(s?.b_patch)}</td></tr>
    ${perPatch}
    <tr><td>C · segmentation</td><td class="num">${fmtScore(s?.c_seg)}</td></tr>
    <tr><td>ensemble A+C</td><td class="num">${fmtScore(s?.ens_ac)}</td></tr>
    <tr><td>ensemble A+B+C</td><td class="num">${fmtScore(s?.ens_abc)}</td></tr>
    <tr><td>tube standard / pigtail</td>
        <td class="num">${fmtScore(d.tube?.standard)} / ${fmtScore(d.tube?.pigtail)}</td></tr>
    <tr><td>thresholds (ptx / tube)</td>
        <td class="num">${fmtScore(th?.ptx_threshold)} / ${fmtScore(th?.tube_threshold)}</td></tr>
  </table>`;
}

function renderOverlays(d: StudyDetail): string {
  const size = d.result?.image_size;
  if (!size || !d.result) return "";
  return Object.entries(d.result.patch_rects)
    .map(
      ([tag, rect]) =>
        `<div class="patch-box" style="${overlayStyle(rect, size)}" title="${escapeHtml(tag)}">` +
        `<span>${escapeHtml(tag)}</span></div>`,
    )
    .join("");
}

function renderAdjudicationHistory(d: StudyDetail): string {
  if (!d.adjudications.length) return "";
  const items = d.adjudications
    .map(
      (a) =>
        `<li><b>${escapeHtml(a.decision)}</b> by ${escapeHtml(a.reviewer_id)} at ${fmtTime(a.timestamp)}` +
        (a.note ? ` — ${escapeHtml(a.note)}` : "") +
        `</li>`,
    )
    .join("");
  return `<h3>Adjudication history</h3><ul class="history">${items}</ul>`;
}

export function renderDetail(state: AppState): string {
  const d = state.detail;
  if (!d) return `<section class="detail"><p class="empty">No study loaded.</p></section>`;
  const reviewable = d.status === "flagged";
  const disabled = reviewable ? "" : " disabled";
  const zoomPct = Math.round(state.imageZoom * 100);
  const filter = state.imageInvert ? "invert(1)" : "none";
  return `
  <section class="detail">
    <header>
      <button data-action="back">← Worklist</button>
      <h1 class="mono">${escapeHtml(d.study_id)}</h1>
      ${statusBadge(d.status)}
      ${d.degraded_lungs ? '<span class="status degraded">degraded lung geometry</span>' : ""}
    </header>
    <div class="columns">
      <div class="panel image-panel">
        <div class="image-tools">
          <label>zoom <input data-tool="zoom" type="range" min="100" max="400" value="${zoomPct}"></label>
          <label><input data-tool="invert" type="checkbox"${state.imageInvert ? " checked" : ""}> invert</label>
        </div>
        <div class="image-frame">
          <div class="image-stack" style="transform:scale(${state.imageZoom});filter:${filter}">
            <img src="${imageUrl(d.study_id)}" alt="chest x-ray ${escapeHtml(d.study_id)}">
            ${renderOverlays(d)}
          </div>
        </div>
      </div>
      <div class="panel report-panel">
        <h3>Report</h3>
        <div class="report">${renderReport(d.report_text, d.nlp?.mentions ?? [])}</div>
        <h3>Scores</h3>
        ${renderScorePanel(d)}
      </div>
      <div class="panel adjudication-panel">
        <h3>Adjudication</h3>
        ${reviewable ? "" : '<p class="empty">Controls are enabled only while the study is flagged.</p>'}
        <label>reviewer
          <input data-field="reviewerId" type="text" value="${escapeHtml(state.reviewerId)}" placeholder="reviewer id"${disabled}>
        </label>
        <label>note
          <textarea data-field="note" rows="3"${disabled}>${escapeHtml(state.note)}</textarea>
        </label>
        <div class="decision-buttons">
          <button data-decision="confirmed_missed"${disabled}>Confirm missed</button>
          <button data-decision="not_missed"${disabled}>Not missed</button>
          <button data-decision="indeterminate"${disabled}>Indeterminate</button>
        </div>
        ${renderAdjudicationHistory(d)}
      </div>
    </div>
  </section>`;
}

export function renderApp(state: AppState): string {
  const body = state.view === "detail" ? renderDetail(state) : renderWorklist(state);
  return `${renderBanner(state)}${body}`;
}
