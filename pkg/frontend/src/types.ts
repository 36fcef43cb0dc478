// Shapes mirror the service JSON verbatim; the UI never derives clinical
// values itself, it only displays what these payloads carry.

export interface Funnel {
  total: number;
  frontal: number;
  flagged: number;
  confirmed: number;
}

export interface Mention {
  sentence_index: number;
  start: number;
  end: number;
  polarity: "positive" | "negated";
}

export interface NlpResult {
  positive: boolean;
  mentions: Mention[];
  sentence_count: number;
}

export interface Scores {
  a_full: number;
  b_patch: number;
  b_per_patch: Record<string, number>;
  c_seg: number;
  ens_ac: number;
  ens_abc: number;
}

export interface TubeScores {
  standard: number;
  pigtail: number;
  any: number;
}

export interface Thresholds {
  ptx_threshold: number;
  tube_threshold: number;
}

export interface AdjudicationRecord {
  study_id: string;
  decision: "confirmed_missed" | "not_missed" | "indeterminate";
  reviewer_id: string;
  note: string;
  timestamp: number;
}

export interface WorklistRow {
  study_id: string;
  status: string;
  flagged: boolean;
  ensemble_score: number | null;
  ensemble_members: string[] | null;
  scores: Scores | null;
  tube: TubeScores | null;
  view_score: number | null;
  degraded_lungs: boolean;
  thresholds_used: Thresholds | null;
  nlp: NlpResult | null;
  flagged_at: number | null;
  adjudication: AdjudicationRecord | null;
}

export interface WorklistResponse {
  studies: WorklistRow[];
  funnel: Funnel;
}

export type Rect = [number, number, number, number]; // x0, y0, w, h

export interface StudyResultPayload {
  study_id: string;
  status: string;
  view_score: number | null;
  frontal: boolean | null;
  scores: Scores | null;
  tube: TubeScores | null;
  degraded_lungs: boolean;
  timings: Record<string, number>;
  patch_rects: Record<string, Rect>;
  image_size: [number, number] | null; // width, height
  skip_reason: string | null;
  error: string | null;
  error_stage: string | null;
}

export interface TriageDecisionPayload {
  study_id: string;
  flagged: boolean;
  reasons: Record<string, boolean>;
  thresholds_used: Thresholds;
  ensemble_score: number | null;
  ensemble_members: string[];
}

export interface StudyDetail extends WorklistRow {
  record: {
    study_id: string;
    image_path: string;
    report: string | null;
    report_path: string | null;
  };
  report_text: string;
  result: StudyResultPayload | null;
  triage: TriageDecisionPayload | null;
  adjudications: AdjudicationRecord[];
}

export interface AdjudicationResponse {
  study: StudyDetail;
  funnel: Funnel;
}

export type Decision = AdjudicationRecord["decision"];
