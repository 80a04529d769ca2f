/** Thin typed client for the boxlens HTTP/JSON API (its only backend). */

import type {
  DatasetInfo,
  ExplanationJson,
  PickResponse,
  RoundJson,
  SessionJson,
  TrainResponse,
} from './types.ts';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

/** The server rejected a round because one is already being retrained. */
export class RetrainInProgressError extends ApiError {
  constructor(message: string) {
    super(409, message);
    this.name = 'RetrainInProgressError';
  }
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string }
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown
  ): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const payload = (await resp.json()) as { detail?: string };
        if (payload.detail) detail = payload.detail;
      } catch {
        // keep the generic message when the error body is not JSON
      }
      if (resp.status === 409) throw new RetrainInProgressError(detail);
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  listDatasets(): Promise<DatasetInfo[]> {
    return this.request('GET', '/api/datasets');
  }

  trainModel(req: {
    dataset: string;
    kind: string;
    params?: Record<string, unknown>;
    seed?: number;
  }): Promise<TrainResponse> {
    return this.request('POST', '/api/models', req);
  }

  explain(
    modelId: string,
    req: {
      instance_index?: number;
      text?: string;
      k?: number;
      n?: number;
      seed?: number;
    }
  ): Promise<ExplanationJson> {
    return this.request('POST', `/api/models/${modelId}/explain`, req);
  }

  pick(
    modelId: string,
    req: { instance_indices: number[]; B: number; k?: number; seed?: number }
  ): Promise<PickResponse> {
    return this.request('POST', `/api/models/${modelId}/pick`, req);
  }

  createSession(req: {
    dataset: string;
    model_spec: { kind: string; params?: Record<string, unknown>; seed?: number };
    B?: number;
    k?: number;
    seed?: number;
  }): Promise<SessionJson> {
    return this.request('POST', '/api/sessions', req);
  }

  getSession(sessionId: string): Promise<SessionJson> {
    return this.request('GET', `/api/sessions/${sessionId}`);
  }

  submitRound(sessionId: string, removeWords: string[]): Promise<RoundJson> {
    return this.request('POST', `/api/sessions/${sessionId}/rounds`, {
      remove_words: removeWords,
    });
  }
}
