import type { Label, PredictResponse } from "./types";

/** Display order matches the evaluation reports: not_fake first. */
export const DISPLAY_ORDER: Label[] = ["not_fake", "fake"];

export interface ProbabilityRow {
  label: Label;
  /** Raw probability in [0, 1], used for bar widths. */
  value: number;
  /** Percentage with one decimal, e.g. "62.5". */
  percent: string;
}

/**
 * One row per class, percentages rounded to one decimal.  The service
 * guarantees the probabilities sum to 1, so the two rounded percentages
 * sum to 100 within 0.1.
 */
export function probabilityRows(response: PredictResponse): ProbabilityRow[] {
  return DISPLAY_ORDER.map((label) => {
    const value = response.probabilities[label] ?? 0;
    return { label, value, percent: (value * 100).toFixed(1) };
  });
}

export function formatLatency(latencyMs: number): string {
  return `${Math.round(latencyMs)} ms`;
}
