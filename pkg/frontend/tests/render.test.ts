import { describe, expect, it } from 'vitest';

import { renderExplanation, safeRender, tokenize } from '../src/render.ts';
import type { ExplanationJson } from '../src/types.ts';

function exp(features: Array<[string, number, number]>): ExplanationJson {
  return {
    instance_id: 'doc-1',
    target_class: 1,
    intercept: 0.4,
    fidelity: 0.93,
    features: features.map(([token, column, weight]) => ({
      token,
      column,
      weight,
    })),
    config: { k: 10 },
  };
}

describe('tokenize', () => {
  it('matches the server rule: lowercase alphanumeric runs', () => {
    expect(tokenize('Sneeze, no fatigue!')).toEqual(['sneeze', 'no', 'fatigue']);
    expect(tokenize('')).toEqual([]);
    expect(tokenize('abc123 x-y')).toEqual(['abc123', 'x', 'y']);
  });
});

describe('renderExplanation', () => {
  it('normalizes highlight intensity to the largest weight', () => {
    const view = renderExplanation(
      exp([
        ['good', 0, 0.8],
        ['bad', 1, -0.4],
      ]),
      'good and bad words'
    );
    const byText = new Map(view.tokens.map((t) => [t.text, t]));
    expect(byText.get('good')).toMatchObject({ intensity: 1, sign: 'positive' });
    expect(byText.get('bad')).toMatchObject({ intensity: 0.5, sign: 'negative' });
    expect(byText.get('and')).toMatchObject({ intensity: 0, sign: null });
  });

  it('zero-weight explanation produces no highlights', () => {
    const view = renderExplanation(exp([['good', 0, 0]]), 'good words');
    expect(view.tokens.every((t) => t.intensity === 0 && t.sign === null)).toBe(
      true
    );
    expect(view.bars).toEqual([]);
  });

  it('sign-codes positive and negative weights differently', () => {
    const view = renderExplanation(
      exp([
        ['up', 0, 0.3],
        ['down', 1, -0.3],
      ]),
      'up down'
    );
    const signs = view.bars.map((b) => b.sign);
    expect(new Set(signs)).toEqual(new Set(['positive', 'negative']));
  });

  it('never shows more bars than features and sorts by magnitude', () => {
    const features: Array<[string, number, number]> = Array.from(
      { length: 10 },
      (_, i) => [`t${i}`, i, (i + 1) / 10] as [string, number, number]
    );
    const view = renderExplanation(exp(features), 't0 t1 t2');
    expect(view.bars.length).toBeLessThanOrEqual(10);
    const mags = view.bars.map((b) => Math.abs(b.weight));
    expect(mags).toEqual([...mags].sort((a, b) => b - a));
  });

  it('is deterministic', () => {
    const payload = exp([
      ['alpha', 0, 0.6],
      ['beta', 1, -0.2],
    ]);
    const a = renderExplanation(payload, 'alpha beta gamma');
    const b = renderExplanation(payload, 'alpha beta gamma');
    expect(a).toEqual(b);
  });

  it('exposes the fidelity badge', () => {
    const view = renderExplanation(exp([['x', 0, 1]]), 'x');
    expect(view.fidelity.value).toBeCloseTo(0.93);
    expect(view.fidelity.level).toBe('good');
    expect(view.fidelity.label).toContain('0.93');
  });
});

describe('safeRender', () => {
  it('routes schema mismatches to an error panel', () => {
    const result = safeRender({ nonsense: true }, 'text');
    expect(result.kind).toBe('error');
    if (result.kind === 'error') {
      expect(result.message.length).toBeGreaterThan(0);
    }
  });

  it('returns a view for a valid payload', () => {
    const result = safeRender(exp([['x', 0, 1]]), 'x y');
    expect(result.kind).toBe('view');
  });

  it('rejects malformed feature entries', () => {
    const bad = {
      instance_id: 'd',
      target_class: 1,
      intercept: 0,
      fidelity: 1,
      features: [{ token: 'x', column: 'zero', weight: 1 }],
      config: {},
    };
    expect(safeRender(bad, 'x').kind).toBe('error');
  });
});
