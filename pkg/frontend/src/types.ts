/**
 * Wire types for the review service JSON API.
 *
 * These mirror the server's response dicts field for field. Fields the
 * server fills in lazily (job frame counts, validation results) are typed
 * nullable rather than optional because the server always emits the key.
 */

export type SessionState =
  | "created"
  | "proposed"
  | "simulated"
  | "accepted"
  | "awaiting_requery";

export type JobStatus = "queued" | "running" | "done" | "failed";

export type Decision = "plausible" | "implausible";

export interface PartDescription {
  name: string;
  coarse_material: string;
  fine_material: string | null;
  color: string | null;
}

export interface ObjectDescriptionInput {
  shape_name: string;
  parts: Array<Pick<PartDescription, "name" | "coarse_material">>;
  images?: string[];
}

export interface MaterialView {
  behavior: string;
  E: number;
  nu: number;
  rho: number;
  sigma_y: number | null;
  phi: number | null;
}

export interface ValidationView {
  ok: boolean;
  errors: string[];
  clamps: string[];
  materials: Record<string, MaterialView>;
}

export interface MessageView {
  role: string;
  text: string;
}

export interface IterationView {
  index: number;
  messages: MessageView[];
  response: string;
  parse_error: string | null;
  warnings: string[];
  validation: ValidationView | null;
  verdict: string | null;
  test_case: string | null;
  expert_comment: string | null;
}

export interface FineView {
  assignments: Record<string, string>;
  warnings: string[];
  parse_error: string | null;
}

export interface VerdictComment {
  part: string;
  text: string;
}

export interface VerdictRecord {
  job_id: string;
  scenario: string;
  decision: Decision;
  comments: VerdictComment[];
  reviewer: string;
  timestamp: string;
}

export interface JobView {
  job_id: string;
  session_id: string;
  scenario: Record<string, unknown> & { type?: string };
  status: JobStatus;
  error: string | null;
  n_frames: number | null;
  duration: number;
  fps: number;
  created_at: string;
  finished_at: string | null;
}

export interface SessionSummary {
  session_id: string;
  state: SessionState;
  shape_name: string;
  n_parts: number;
  rectification_count: number;
  n_jobs: number;
  created_at: string;
}

export interface SessionView extends SessionSummary {
  description: {
    shape_name: string;
    parts: PartDescription[];
    images: string[];
  };
  fine: FineView;
  iterations: IterationView[];
  verdicts: VerdictRecord[];
  jobs: JobView[];
}

export interface SimulateRequest {
  scenario?: Record<string, unknown> & { type: string };
  config?: Record<string, unknown>;
  duration?: number;
  fps?: number;
}

export interface VerdictRequest {
  decision: Decision;
  job_id: string;
  comments: VerdictComment[];
  reviewer: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
