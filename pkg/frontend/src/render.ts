/** Deterministic view models for one explanation: highlighted text,
 * weight bar chart, and a fidelity badge. No DOM — the structures here
 * are rendered by whatever host page imports them, and unit-tested as
 * plain data. */

import {
  assertExplanation,
  SchemaMismatchError,
  type ExplanationJson,
} from './types.ts';

export type WeightSign = 'positive' | 'negative';

export interface HighlightedToken {
  text: string;
  /** 0 when the token carries no weight; otherwise |w| / max |w|. */
  intensity: number;
  sign: WeightSign | null;
}

export interface Bar {
  token: string;
  weight: number;
  sign: WeightSign;
}

export interface FidelityBadge {
  value: number;
  label: string;
  level: 'good' | 'fair' | 'poor';
}

export interface ExplanationView {
  instanceId: string;
  tokens: HighlightedToken[];
  bars: Bar[];
  fidelity: FidelityBadge;
}

export type RenderResult =
  | { kind: 'view'; view: ExplanationView }
  | { kind: 'error'; message: string };

/** Same tokenization as the server: lowercase alphanumeric runs. */
export function tokenize(text: string): string[] {
  return text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
}

function fidelityBadge(value: number): FidelityBadge {
  const level = value >= 0.8 ? 'good' : value >= 0.5 ? 'fair' : 'poor';
  return { value, label: `local fit R² = ${value.toFixed(2)}`, level };
}

/** Build the view for one explanation over the raw document text.
 *
 * Highlight intensity is normalized per explanation: the largest
 * absolute weight maps to full intensity. Bars are sorted by absolute
 * weight, largest first, and there are never more than the explanation's
 * own feature count (at most K by the server contract).
 */
export function renderExplanation(
  payload: unknown,
  documentText: string
): ExplanationView {
  const exp: ExplanationJson = assertExplanation(payload);
  const byToken = new Map<string, number>();
  for (const f of exp.features) byToken.set(f.token, f.weight);
  const maxAbs = Math.max(
    0,
    ...exp.features.map((f) => Math.abs(f.weight))
  );
  const tokens: HighlightedToken[] = tokenize(documentText).map((text) => {
    const w = byToken.get(text);
    if (w === undefined || w === 0 || maxAbs === 0) {
      return { text, intensity: 0, sign: null };
    }
    return {
      text,
      intensity: Math.abs(w) / maxAbs,
      sign: w > 0 ? 'positive' : 'negative',
    };
  });
  const bars: Bar[] = exp.features
    .filter((f) => f.weight !== 0)
    .map((f) => ({
      token: f.token,
      weight: f.weight,
      sign: f.weight > 0 ? ('positive' as const) : ('negative' as const),
    }))
    .sort((a, b) => Math.abs(b.weight) - Math.abs(a.weight));
  return {
    instanceId: exp.instance_id,
    tokens,
    bars,
    fidelity: fidelityBadge(exp.fidelity),
  };
}

/** Render, routing schema mismatches to a visible error panel. */
export function safeRender(payload: unknown, documentText: string): RenderResult {
  try {
    return { kind: 'view', view: renderExplanation(payload, documentText) };
  } catch (err) {
    if (err instanceof SchemaMismatchError) {
      return { kind: 'error', message: err.message };
    }
    throw err;
  }
}
