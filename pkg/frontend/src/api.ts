import type { Decision, PageResponse, PropertyCard, Stats, Tab } from './types.js';

/** status 0 means the service was unreachable (network failure). */
export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class TriageApi {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async properties(status: Tab, page: number, pageSize: number): Promise<PageResponse> {
    const params = new URLSearchParams({
      status,
      page: String(page),
      page_size: String(pageSize),
    });
    return this.request<PageResponse>(`/api/properties?${params}`);
  }

  async decide(propertyId: string, verdict: Decision, reason: string): Promise<PropertyCard> {
    return this.request<PropertyCard>(
      `/api/properties/${encodeURIComponent(propertyId)}/decision`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ verdict, reason }),
      },
    );
  }

  async stats(): Promise<Stats> {
    return this.request<Stats>('/api/stats');
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, init);
    } catch {
      throw new ApiError(0, 'service unreachable');
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, await describeFailure(resp));
    }
    return (await resp.json()) as T;
  }
}

async function describeFailure(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === 'string') return body.detail;
    if (body.detail !== undefined) return JSON.stringify(body.detail);
  } catch {
    // fall through to the generic message
  }
  return `request failed with status ${resp.status}`;
}
