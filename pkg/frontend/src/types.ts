/** Mirrors of the review API's JSON payloads. Nothing here is computed
 * client-side; every field comes off the wire as-is. */

export const VIEWS = ["ipsilateral", "contralateral", "top"] as const;
export type ViewName = (typeof VIEWS)[number];

export const LIKERT_DIMENSIONS = [
  "accuracy",
  "usability",
  "interpretability",
  "clinical_relevance",
] as const;
export type LikertDimension = (typeof LIKERT_DIMENSIONS)[number];

export type ReviewState = "pending" | "saved" | "submitted";

export interface PhaseScore {
  phase: string;
  score: number;
  display_score: number;
  impairments: string[];
}

export interface AssessmentRecord {
  record_id: number;
  segment_id: string;
  patient_id: string;
  task_score: number;
  display_score: number;
  execution_time: number;
  phase_scores: PhaseScore[];
  quality: Record<string, number>;
  model_provenance: Record<string, unknown>;
  review_state: ReviewState;
  clinician_edits: Record<string, unknown> | null;
  created_at: string | null;
  updated_at: string | null;
}

export interface PatientSummary {
  patient_id: string;
  segment_count: number;
  pending_count: number;
}

export interface VideoManifest {
  segment_id: string;
  view: ViewName;
  fps: number;
  frame_count: number;
  frames: string[];
}

export interface SaliencyEntry {
  overlay: string;
  clip_step: number;
  source_frame: number;
  url: string;
}

export interface SaliencyManifest {
  segment_id: string;
  view: string;
  layer: string;
  target_class: number;
  is_zero: boolean;
  frames: SaliencyEntry[];
}

export interface FeedbackBody {
  likert: Record<string, number>;
  manual_task_score: number | null;
  free_text: string;
  themes: string[];
}

export interface LikertSummary {
  n: number;
  mean: number | null;
  stddev: number | null;
  low_n: boolean;
}

export interface StudySummary {
  records: { total: number; by_state: Record<string, number> };
  agreement: { n: number; matches: number; agreement_pct: number } | null;
  feedback: {
    responses: number;
    likert: Record<string, LikertSummary>;
    themes: Record<string, number>;
  };
}
