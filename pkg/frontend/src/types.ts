export type LabelToken = "ENTAILMENT" | "NEUTRAL" | "CONTRADICTION";

export const LABELS: LabelToken[] = ["ENTAILMENT", "NEUTRAL", "CONTRADICTION"];

// Fixed color coding, mirrored in reports for cross-artifact consistency.
export const LABEL_COLORS: Record<LabelToken, string> = {
  ENTAILMENT: "#2e7d32",
  NEUTRAL: "#8d6e00",
  CONTRADICTION: "#c62828",
};

// Legend wording matches the classification prompt's definition block.
export const LEGEND_HEADER = "If TWEET is true:";
export const LABEL_DEFINITIONS: Record<LabelToken, string> = {
  ENTAILMENT: "(ENTAILMENT) then CLAIM is also true.",
  NEUTRAL: "(NEUTRAL) CLAIM cannot be said to be true or false.",
  CONTRADICTION: "(CONTRADICTION) then CLAIM is false.",
};

export type ItemStatus = "pending" | "confirmed" | "overridden";

export interface ClaimView {
  id: string;
  text: string;
  source?: string | null;
  debunked_on?: string | null;
}

export interface Scores {
  token_score: number;
  semantic_score: number;
  combined_score: number;
}

export interface PredictionView {
  model_id: string;
  label: LabelToken | null;
  ambiguous: boolean;
}

export interface AdjudicationView {
  decision: "confirm" | "override";
  label: string | null;
  reviewer: string;
  created_at: string;
}

export interface QueueItem {
  pair_id: string;
  post: { id: string; text: string } | null;
  claim: ClaimView | null;
  scores: Scores;
  prediction: PredictionView | null;
  status: ItemStatus;
  history: AdjudicationView[];
}

export interface QueuePage {
  items: QueueItem[];
  next_cursor: string | null;
  total: number;
}

export interface MatchCandidate {
  claim: ClaimView;
  token_score: number;
  semantic_score: number;
  combined_score: number;
  label?: LabelToken | null;
  ambiguous?: boolean;
}

export interface ReviewDecision {
  decision: "confirm" | "override";
  reviewer: string;
  label?: LabelToken;
  force?: boolean;
}

export function displayLabel(item: QueueItem): LabelToken | "unlabeled" {
  return item.prediction?.label ?? "unlabeled";
}
