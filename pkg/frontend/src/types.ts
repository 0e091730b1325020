export type Phase = "seeding" | "active" | "exhausted" | "discarded";

export type Label = 0 | 1;

export interface TopicInfo {
  topic_id: string;
  pool_size: number;
  ranking_depth: number;
}

export interface JudgedRecord {
  doc_id: string;
  label: number;
  source: string;
  timestamp: number;
  batch: number;
}

export interface SessionState {
  session_id: string;
  topic_id: string;
  phase: Phase;
  budget_remaining: number;
  initial_budget: number;
  batch_size: number;
  pool_size: number;
  strategy: string;
  created_at: number;
  judged: JudgedRecord[];
  pending: string[];
  pending_charged: boolean;
  counts: { relevant: number; nonrelevant: number };
  batches: string[][];
  has_model: boolean;
}

export interface DocPayload {
  doc_id: string;
  text: string;
}

export type QrelsMode = "human_only" | "hybrid";
