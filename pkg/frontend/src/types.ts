// Shapes of the review API payloads.

export interface Evidence {
  seed: string;
  similarity: number;
}

export interface ExamplePost {
  id: string;
  text: string;
  token: string;
  span: [number, number];
  kind: string;
}

export interface Neighbor {
  token: string;
  similarity: number;
}

export interface CandidateItem {
  term: string;
  status: string;
  source: string;
  generation: number;
  evidence?: Evidence;
  neighbors: Neighbor[];
  examples: ExamplePost[];
}

export interface CandidatePage {
  page: number;
  page_size: number;
  total: number;
  items: CandidateItem[];
}

export interface LexiconCounts {
  seed: number;
  candidate: number;
  accepted: number;
  rejected: number;
  updated: number;
}

export interface GenerationRow {
  generation: number;
  threshold: number | null;
  seed: number;
  candidate: number;
  accepted: number;
  rejected: number;
}

export interface LexiconOverview {
  counts: LexiconCounts;
  generations: GenerationRow[];
}

export interface Stats {
  max_generation: number;
  pending: number;
  decided: number;
  accepted: number;
  rejected: number;
  seed: number;
  updated: number;
  decision_log_length: number;
}

export interface DecisionResponse {
  entry: { term: string; status: string; generation: number };
  counts: LexiconCounts;
}

export interface ExpandResponse {
  generation: number;
  candidates: number;
  sources_missing: string[];
}

export type DecisionKind = "accept" | "reject";

/** Per-card UI state layered over the API items. */
export type CardState =
  | { phase: "idle" }
  | { phase: "submitting"; decision: DecisionKind }
  | { phase: "failed"; decision: DecisionKind; message: string };
