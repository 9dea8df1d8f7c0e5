// Payload shapes of the hunt service JSON API.

export interface Predicate {
  name: string;
  args: string[];
}

export interface EvidenceRef {
  kind: "telemetry" | "intel" | "hypothesis";
  source: string;
  offset?: number;
}

export interface Verdict {
  hypothesis_id: string;
  decision: "accepted" | "rejected";
  verifier: string;
  rationale: EvidenceRef[];
}

export type HypothesisStatus = "pending" | "accepted" | "rejected";

export interface Hypothesis {
  id: string;
  kind: "detection" | "threat";
  predicate: Predicate;
  confidence: number;
  evidence: EvidenceRef[];
  origin: string;
  status: HypothesisStatus;
  verdicts: Verdict[];
}

export interface Fact {
  predicate: Predicate;
  provenance: EvidenceRef[];
}

export type RecommendationStatus = "recommended" | "approved" | "declined";

export interface Recommendation {
  id: string;
  action: string;
  targets: string[];
  fact: Predicate;
  cost_vector: Record<string, string>;
  rule: string;
  status: RecommendationStatus;
  disposed_by?: string;
}

export interface TelemetryCounts {
  http: number;
  syslog: number;
  forensics: number;
}

export type HuntStatus = "runnable" | "awaiting_analyst" | "quiescent";

export interface HuntState {
  id: string;
  name: string;
  gate: "required" | "auto";
  status: HuntStatus;
  seq: number;
  facts: Fact[];
  hypotheses: Hypothesis[];
  recommendations: Recommendation[];
  telemetry_counts: TelemetryCounts;
}

export interface HuntRow {
  id: string;
  name: string;
  status: HuntStatus;
  seq: number;
}

export interface AdvanceResult {
  status: HuntStatus;
  seq: number;
  new_records: unknown[];
}

export interface DecisionResult {
  seq: number;
  hypothesis: Hypothesis;
  status: HuntStatus;
}

export interface DispositionResult {
  seq: number;
  recommendation: Recommendation;
}
