import { describe, expect, it } from 'vitest';

import { compareModels, seededUnit } from '../src/compare.ts';
import type { ExplanationJson } from '../src/types.ts';

function exp(token: string, weight: number): ExplanationJson {
  return {
    instance_id: 'doc-1',
    target_class: 1,
    intercept: 0.5,
    fidelity: 0.9,
    features: [{ token, column: 0, weight }],
    config: {},
  };
}

describe('seededUnit', () => {
  it('is deterministic and in [0, 1)', () => {
    for (let s = 0; s < 200; s++) {
      const u = seededUnit(s);
      expect(u).toBe(seededUnit(s));
      expect(u).toBeGreaterThanOrEqual(0);
      expect(u).toBeLessThan(1);
    }
  });

  it('takes both sides over many seeds', () => {
    const below = Array.from({ length: 100 }, (_, s) => seededUnit(s)).filter(
      (u) => u < 0.5
    ).length;
    expect(below).toBeGreaterThan(20);
    expect(below).toBeLessThan(80);
  });
});

describe('compareModels', () => {
  const a = { modelId: 'm-a', explanation: exp('good', 0.8) };
  const b = { modelId: 'm-b', explanation: exp('bad', -0.4) };

  it('identical models give identical panels', () => {
    const same = { modelId: 'm-a', explanation: exp('good', 0.8) };
    const view = compareModels(a, same, 'good words', 1);
    expect(view.left.view).toEqual(view.right.view);
  });

  it('placement is randomized by seed but reproducible', () => {
    const placements = new Set<string>();
    for (let seed = 0; seed < 50; seed++) {
      const v1 = compareModels(a, b, 'good bad', seed);
      const v2 = compareModels(a, b, 'good bad', seed);
      expect(v1.left.modelId).toBe(v2.left.modelId);
      placements.add(v1.left.modelId);
    }
    // both orderings occur across seeds
    expect(placements).toEqual(new Set(['m-a', 'm-b']));
  });

  it('differing top words visibly diverge', () => {
    const view = compareModels(a, b, 'good bad', 3);
    const leftTop = view.left.view?.bars[0]?.token;
    const rightTop = view.right.view?.bars[0]?.token;
    expect(leftTop).toBeDefined();
    expect(rightTop).toBeDefined();
    expect(leftTop).not.toBe(rightTop);
  });

  it('shares one color scale across both panels', () => {
    const view = compareModels(a, b, 'good bad', 0);
    expect(view.sharedScale).toBeCloseTo(0.8);
  });

  it('renders partially with an error badge when one fetch failed', () => {
    const broken = {
      modelId: 'm-b',
      explanation: null,
      fetchError: 'HTTP 404',
    };
    const view = compareModels(a, broken, 'good bad', 2);
    const panels = [view.left, view.right];
    const ok = panels.find((p) => p.modelId === 'm-a');
    const failed = panels.find((p) => p.modelId === 'm-b');
    expect(ok?.view).not.toBeNull();
    expect(ok?.errorBadge).toBeNull();
    expect(failed?.view).toBeNull();
    expect(failed?.errorBadge).toBe('HTTP 404');
  });
});
