/** Side-by-side comparison of two models' explanations of one instance.
 *
 * Which model lands in the left or right panel is randomized by a seed so
 * repeated comparisons carry no positional bias, yet any given seed gives
 * a reproducible layout. When one explanation failed to fetch the other
 * still renders, with an error badge in the empty panel.
 */

import { renderExplanation, type ExplanationView } from './render.ts';

export interface ComparePanel {
  modelId: string;
  view: ExplanationView | null;
  errorBadge: string | null;
}

export interface CompareView {
  left: ComparePanel;
  right: ComparePanel;
  /** true when the seed placed model B on the left. */
  swapped: boolean;
  /** max |weight| across both explanations; shared token color scale. */
  sharedScale: number;
}

export interface CompareInput {
  modelId: string;
  explanation: unknown | null;
  fetchError?: string;
}

/** Deterministic 32-bit mixer; one draw in [0, 1) per seed. */
export function seededUnit(seed: number): number {
  let t = (seed >>> 0) + 0x6d2b79f5;
  t = Math.imul(t ^ (t >>> 15), t | 1);
  t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
  return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
}

function toPanel(input: CompareInput, documentText: string): ComparePanel {
  if (input.explanation === null) {
    return {
      modelId: input.modelId,
      view: null,
      errorBadge: input.fetchError ?? 'explanation unavailable',
    };
  }
  return {
    modelId: input.modelId,
    view: renderExplanation(input.explanation, documentText),
    errorBadge: null,
  };
}

function maxAbsWeight(panel: ComparePanel): number {
  if (!panel.view) return 0;
  return Math.max(0, ...panel.view.bars.map((b) => Math.abs(b.weight)));
}

export function compareModels(
  a: CompareInput,
  b: CompareInput,
  documentText: string,
  seed: number
): CompareView {
  const panelA = toPanel(a, documentText);
  const panelB = toPanel(b, documentText);
  const swapped = seededUnit(seed) < 0.5;
  const [left, right] = swapped ? [panelB, panelA] : [panelA, panelB];
  return {
    left,
    right,
    swapped,
    sharedScale: Math.max(maxAbsWeight(panelA), maxAbsWeight(panelB)),
  };
}
