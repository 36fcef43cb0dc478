// DOM glue: owns the state instance, routes user events to API calls and
// state transitions, and re-renders. All mutations wait for the server;
// failures only raise the banner.

import { ApiError, getStudy, getWorklist, submitAdjudication } from "./api.js";
import {
  applyAdjudication,
  applyDetail,
  applyError,
  applyWorklist,
  backToWorklist,
  initialState,
  type AppState,
} from "./state.js";
import { renderApp } from "./render.js";
import type { Decision } from "./types.js";

let state: AppState = { ...initialState };
let root: HTMLElement;
let lastLoad: () => Promise<void> = loadWorklist;

function set(next: AppState): void {
  state = next;
  root.innerHTML = renderApp(state);
}

async function loadWorklist(): Promise<void> {
  lastLoad = loadWorklist;
  try {
    const payload = await getWorklist(state.filters.status === "all" ? "" : state.filters.status);
    set(applyWorklist(state, payload));
  } catch (err) {
    set(applyError(state, describe(err)));
  }
}

async function openStudy(studyId: string): Promise<void> {
  lastLoad = () => openStudy(studyId);
  try {
    const detail = await getStudy(studyId);
    set(applyDetail(state, detail));
  } catch (err) {
    set(applyError(state, describe(err)));
  }
}

async function adjudicate(decision: Decision): Promise<void> {
  const d = state.detail;
  if (!d) return;
  const reviewer = state.reviewerId.trim();
  if (!reviewer) {
    set(applyError(state, "enter a reviewer id before recording a decision"));
    return;
  }
  try {
    const resp = await submitAdjudication(d.study_id, decision, reviewer, state.note);
    set(applyAdjudication(state, resp));
  } catch (err) {
    // 409: someone (or a stale tab) already adjudicated; nothing changes locally
    set(applyError(state, describe(err)));
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.status === 409) return `conflict: ${err.message}`;
    if (err.status === 0) return err.message;
    return `request failed (${err.status}): ${err.message}`;
  }
  return String(err);
}

function onClick(event: Event): void {
  const target = event.target as HTMLElement;
  const action = target.closest<HTMLElement>("[data-action]")?.dataset.action;
  if (action === "retry" || action === "reload") {
    void lastLoad();
    return;
  }
  if (action === "back") {
    set(backToWorklist(state));
    void loadWorklist();
    return;
  }
  const decision = target.closest<HTMLElement>("[data-decision]")?.dataset.decision;
  if (decision) {
    void adjudicate(decision as Decision);
    return;
  }
  const study = target.closest<HTMLElement>("[data-study]")?.dataset.study;
  if (study) void openStudy(study);
}

function onInput(event: Event): void {
  const el = event.target as HTMLInputElement | HTMLSelectElement | HTMLTextAreaElement;
  const field = el.dataset.field;
  if (field === "note") {
    state.note = el.value; // typing must not trigger a re-render
    return;
  }
  if (field === "reviewerId") {
    state.reviewerId = el.value;
    return;
  }
  const tool = el.dataset.tool;
  if (tool === "zoom") {
    state.imageZoom = Number(el.value) / 100;
    applyImageTools();
    return;
  }
  if (tool === "invert") {
    state.imageInvert = (el as HTMLInputElement).checked;
    applyImageTools();
    return;
  }
  const filter = el.dataset.filter;
  if (filter === "status") {
    state.filters.status = el.value;
    void loadWorklist();
  } else if (filter === "minScore" || filter === "maxScore") {
    state.filters[filter] = el.value === "" ? null : Number(el.value);
    set(state);
  }
}

function applyImageTools(): void {
  const stack = root.querySelector<HTMLElement>(".image-stack");
  if (stack) {
    stack.style.transform = `scale(${state.imageZoom})`;
    stack.style.filter = state.imageInvert ? "invert(1)" : "none";
  }
}

export function mount(container: HTMLElement): void {
  root = container;
  root.addEventListener("click", onClick);
  root.addEventListener("input", onInput);
  root.addEventListener("change", onInput);
  set(state);
  void loadWorklist();
}

const el = typeof document !== "undefined" ? document.getElementById("app") : null;
if (el) mount(el);
