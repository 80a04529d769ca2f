/** JSON shapes served by the boxlens HTTP API. */

export interface ExplanationFeature {
  token: string;
  column: number;
  weight: number;
}

export interface ExplanationJson {
  instance_id: string;
  target_class: number;
  intercept: number;
  fidelity: number;
  features: ExplanationFeature[];
  config: Record<string, unknown>;
}

export interface DatasetInfo {
  name: string;
  n_docs: number;
  d_prime: number;
}

export interface TrainResponse {
  model_id: string;
  metrics: { train_acc: number; heldout_acc: number };
  weights_hash: string;
}

export interface PickResponse {
  selected: number[];
  coverage_trace: number[];
  explanations: ExplanationJson[];
}

export interface RoundJson {
  index: number;
  removed_words_cumulative: string[];
  model_version: string;
  metrics: { train_acc: number; heldout_acc: number };
  picked: ExplanationJson[];
  coverage_trace: number[];
}

export interface SessionJson {
  id: string;
  dataset: string;
  model_spec: { kind: string; params: Record<string, unknown>; seed: number };
  B: number;
  k: number;
  seed: number;
  created_at: number;
  rounds: RoundJson[];
}

/** Thrown when a server payload does not match the expected schema. */
export class SchemaMismatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'SchemaMismatchError';
  }
}

export function assertExplanation(value: unknown): ExplanationJson {
  if (typeof value !== 'object' || value === null) {
    throw new SchemaMismatchError('explanation payload is not an object');
  }
  const obj = value as Record<string, unknown>;
  if (typeof obj.instance_id !== 'string') {
    throw new SchemaMismatchError('missing instance_id');
  }
  if (typeof obj.intercept !== 'number' || typeof obj.fidelity !== 'number') {
    throw new SchemaMismatchError('missing intercept or fidelity');
  }
  if (!Array.isArray(obj.features)) {
    throw new SchemaMismatchError('features is not an array');
  }
  for (const f of obj.features) {
    const feat = f as Record<string, unknown>;
    if (
      typeof feat.token !== 'string' ||
      typeof feat.column !== 'number' ||
      typeof feat.weight !== 'number'
    ) {
      throw new SchemaMismatchError('malformed feature entry');
    }
  }
  return value as ExplanationJson;
}
