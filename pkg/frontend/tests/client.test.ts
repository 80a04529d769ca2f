import { describe, expect, it } from 'vitest';

import {
  ApiClient,
  ApiError,
  RetrainInProgressError,
  type FetchLike,
} from '../src/client.ts';

function fakeFetch(
  status: number,
  payload: unknown
): { fetch: FetchLike; calls: Array<{ url: string; init?: unknown }> } {
  const calls: Array<{ url: string; init?: unknown }> = [];
  const fetch: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return { ok: status < 400, status, json: async () => payload };
  };
  return { fetch, calls };
}

describe('ApiClient', () => {
  it('prefixes the base URL and sends JSON bodies', async () => {
    const { fetch, calls } = fakeFetch(200, { model_id: 'm-1' });
    const client = new ApiClient('http://api', fetch);
    await client.trainModel({ dataset: 'toy', kind: 'logreg' });
    expect(calls[0]?.url).toBe('http://api/api/models');
    const init = calls[0]?.init as { method: string; body: string };
    expect(init.method).toBe('POST');
    expect(JSON.parse(init.body)).toEqual({ dataset: 'toy', kind: 'logreg' });
  });

  it('maps 409 to RetrainInProgressError', async () => {
    const { fetch } = fakeFetch(409, { detail: 'in flight' });
    const client = new ApiClient('http://api', fetch);
    await expect(client.submitRound('sess-0', ['w'])).rejects.toBeInstanceOf(
      RetrainInProgressError
    );
  });

  it('maps other failures to ApiError with the server detail', async () => {
    const { fetch } = fakeFetch(404, { detail: 'unknown session' });
    const client = new ApiClient('http://api', fetch);
    const err = await client.getSession('nope').catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err).not.toBeInstanceOf(RetrainInProgressError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).message).toBe('unknown session');
  });

  it('returns parsed payloads on success', async () => {
    const { fetch } = fakeFetch(200, [
      { name: 'toy', n_docs: 10, d_prime: 5 },
    ]);
    const client = new ApiClient('http://api', fetch);
    const datasets = await client.listDatasets();
    expect(datasets).toHaveLength(1);
    expect(datasets[0]?.name).toBe('toy');
  });
});
