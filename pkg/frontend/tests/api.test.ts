import { describe, expect, it } from 'vitest';

import { ApiError, TriageApi } from '../src/api.js';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

describe('TriageApi', () => {
  it('builds the properties query string', async () => {
    const calls: string[] = [];
    const api = new TriageApi('', async (input) => {
      calls.push(input);
      return jsonResponse({ status: 'pending', page: 2, page_count: 3,
                            page_size: 10, total: 25, items: [] });
    });
    const page = await api.properties('pending', 2, 10);
    expect(calls).toEqual(['/api/properties?status=pending&page=2&page_size=10']);
    expect(page.page).toBe(2);
    expect(page.items).toEqual([]);
  });

  it('posts decisions with verdict and reason', async () => {
    let captured: { url: string; init?: RequestInit } | null = null;
    const api = new TriageApi('http://host', async (url, init) => {
      captured = { url, init };
      return jsonResponse({ property_id: 'P1' });
    });
    await api.decide('P1', 'reject', 'URL property');
    expect(captured!.url).toBe('http://host/api/properties/P1/decision');
    expect(captured!.init?.method).toBe('POST');
    expect(JSON.parse(String(captured!.init?.body))).toEqual({
      verdict: 'reject',
      reason: 'URL property',
    });
  });

  it('escapes property ids in the decision path', async () => {
    let url = '';
    const api = new TriageApi('', async (input) => {
      url = input;
      return jsonResponse({});
    });
    await api.decide('P 1/x', 'keep', '');
    expect(url).toBe('/api/properties/P%201%2Fx/decision');
  });

  it('maps HTTP errors to ApiError with the server detail', async () => {
    const api = new TriageApi('', async () =>
      jsonResponse({ detail: 'reject decisions require a reason' }, 422));
    const err = await api.decide('P1', 'reject', '').catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.message).toContain('require a reason');
  });

  it('maps network failures to status 0', async () => {
    const api = new TriageApi('', async () => {
      throw new TypeError('fetch failed');
    });
    const err = await api.stats().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
  });

  it('falls back to a generic message on non-JSON error bodies', async () => {
    const api = new TriageApi('', async () => new Response('boom', { status: 500 }));
    const err = await api.stats().catch((e) => e);
    expect(err.message).toContain('500');
  });
});
