// Shapes of the JSON the service returns. The client renders these
// verbatim; nothing here is computed on our side.

export type EvidenceState = "occurred" | "absent";
export type EvidenceAction = "confirm" | "dismiss" | "retract";

export interface DocumentNode {
  id: string;
  name: string;
  process_step: string;
  occurrence_class: number;
  severity?: number;
  detection_hint?: string;
}

export interface DocumentEdge {
  cause: string;
  effect: string;
  trigger_probability: number;
}

export interface NetworkDocument {
  nodes: DocumentNode[];
  edges: DocumentEdge[];
  costs?: Record<string, number>;
}

export interface NetworkSummary {
  network_id: string;
  status: "unchecked" | "consistent" | "inconsistent" | "compiled";
  node_count: number;
  edge_count: number;
  inconsistency_count: number;
  has_recommendation: boolean;
  compiled: boolean;
  compile_warnings: string[];
  created_at: number;
  updated_at: number;
}

export interface NetworkDetail extends NetworkSummary {
  document: NetworkDocument;
}

export interface InconsistencyRow {
  failure_id: string;
  prior: number;
  pre_leak_marginal: number;
  implied_leak: number;
}

export interface InconsistencyReport {
  count: number;
  items: InconsistencyRow[];
}

export interface HistoryEntry {
  ts: number;
  failure_id: string;
  action: EvidenceAction;
  via: string;
}

export interface SessionSummary {
  session_id: string;
  network_id: string;
  seed: number;
  evidence: Record<string, EvidenceState>;
  history: HistoryEntry[];
}

export interface PosteriorPayload {
  posteriors: Record<string, number>;
  stderr: Record<string, number>;
  n_samples: number;
  seed: number | null;
  effective_sample_mass: number;
  leak_posteriors: Record<string, number>;
}

export interface RankedRow {
  failure_id: string;
  posterior: number;
  stderr: number;
}

export interface Rankings {
  causes: RankedRow[];
  effects: RankedRow[];
  evidence: Record<string, EvidenceState>;
  seed: number;
}

export interface RecommendationDiffRow {
  kind: "prior" | "trigger";
  [key: string]: unknown;
}

export interface RecommendationPayload {
  params: { priors: Record<string, number>; triggers: Record<string, number> };
  loss: number;
  residual_inconsistencies: number;
  diff: RecommendationDiffRow[];
  generations_run: number;
}

export interface JobStatus {
  job_id: string;
  network_id?: string;
  status: "queued" | "running" | "done" | "failed";
  result: RecommendationPayload | null;
  error: string | null;
}
