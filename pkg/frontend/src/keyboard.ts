import type { LabelToken } from "./types.js";

export type KeyAction =
  | { kind: "confirm" }
  | { kind: "override"; label: LabelToken }
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "cancel" };

const OVERRIDE_KEYS: Record<string, LabelToken> = {
  e: "ENTAILMENT",
  n: "NEUTRAL",
  c: "CONTRADICTION",
};

/**
 * Triage keybindings: Enter confirms the model label; E/N/C open the
 * override dialog preselecting that label; j/k (or arrows) move the
 * selection; Escape cancels a dialog.
 */
export function actionForKey(key: string): KeyAction | null {
  if (key === "Enter") return { kind: "confirm" };
  const label = OVERRIDE_KEYS[key.toLowerCase()];
  if (label && key.length === 1) return { kind: "override", label };
  if (key === "j" || key === "ArrowDown") return { kind: "next" };
  if (key === "k" || key === "ArrowUp") return { kind: "prev" };
  if (key === "Escape") return { kind: "cancel" };
  return null;
}
