import { describe, expect, it } from 'vitest';

import { ApiError } from '../src/api.js';
import { QueueStore, TriageClient } from '../src/state.js';
import type { Decision, PageResponse, PropertyCard, Stats, Tab } from '../src/types.js';

function card(pid: string, status: Tab = 'pending'): PropertyCard {
  return {
    property_id: pid,
    label: `label ${pid}`,
    triplet_count: 5,
    suggestion: { verdict: 'keep', fired_rules: [], reason: '' },
    samples: [],
    preview_questions: [],
    effective_verdict: status === 'pending' ? null : status === 'kept' ? 'keep' : 'reject',
    status,
  };
}

/** In-memory service double mirroring the real ledger semantics. */
class FakeService implements TriageClient {
  decisions = new Map<string, Decision>();
  decideCalls: Array<{ pid: string; verdict: Decision; reason: string }> = [];
  failWith: ApiError | null = null;
  pending: string[];

  constructor(pids: string[]) {
    this.pending = pids;
  }

  private statusOf(pid: string): Tab {
    const d = this.decisions.get(pid);
    return d === undefined ? 'pending' : d === 'keep' ? 'kept' : 'rejected';
  }

  async properties(status: Tab, page: number, pageSize: number): Promise<PageResponse> {
    const matching = this.pending.filter((pid) => this.statusOf(pid) === status);
    const start = (page - 1) * pageSize;
    return {
      status,
      page,
      page_count: Math.max(1, Math.ceil(matching.length / pageSize)),
      page_size: pageSize,
      total: matching.length,
      items: matching.slice(start, start + pageSize).map((pid) => card(pid, status)),
    };
  }

  async decide(pid: string, verdict: Decision, reason: string): Promise<PropertyCard> {
    if (this.failWith) throw this.failWith;
    this.decideCalls.push({ pid, verdict, reason });
    this.decisions.set(pid, verdict);
    return card(pid, this.statusOf(pid));
  }

  async stats(): Promise<Stats> {
    const counts = { pending: 0, kept: 0, rejected: 0 };
    for (const pid of this.pending) counts[this.statusOf(pid)] += 1;
    return { ...counts, total: this.pending.length,
             triplets: { pending: 0, kept: 0, rejected: 0 } };
  }
}

const PIDS = ['P1', 'P2', 'P3', 'P4', 'P5'];

describe('QueueStore', () => {
  it('loads the pending queue and stats', async () => {
    const store = new QueueStore(new FakeService(PIDS), 3);
    await store.refresh();
    const state = store.snapshot();
    expect(state.items.map((c) => c.property_id)).toEqual(['P1', 'P2', 'P3']);
    expect(state.pageCount).toBe(2);
    expect(state.stats?.pending).toBe(5);
    expect(state.banner).toBeNull();
  });

  it('a decision is only shown after the server acknowledges, via refetch', async () => {
    const service = new FakeService(PIDS);
    const store = new QueueStore(service, 10);
    await store.refresh();
    const ok = await store.submit('keep');
    expect(ok).toBe(true);
    expect(service.decideCalls).toEqual([{ pid: 'P1', verdict: 'keep', reason: '' }]);
    const state = store.snapshot();
    // P1 left the pending queue because the server now reports it kept
    expect(state.items.map((c) => c.property_id)).toEqual(['P2', 'P3', 'P4', 'P5']);
    expect(state.stats?.kept).toBe(1);
    expect(state.inFlight).toBeNull();
  });

  it('reject without a reason never reaches the service', async () => {
    const service = new FakeService(PIDS);
    const store = new QueueStore(service, 10);
    await store.refresh();
    const ok = await store.submit('reject', '   ');
    expect(ok).toBe(false);
    expect(service.decideCalls).toEqual([]);
    expect(store.snapshot().inlineError).toContain('reason');
  });

  it('4xx failures surface inline and keep the queue position', async () => {
    const service = new FakeService(PIDS);
    const store = new QueueStore(service, 10);
    await store.refresh();
    store.moveFocus(2);
    service.failWith = new ApiError(422, 'reject decisions require a reason');
    const ok = await store.submit('reject', 'some reason');
    expect(ok).toBe(false);
    const state = store.snapshot();
    expect(state.inlineError).toContain('require a reason');
    expect(state.focus).toBe(2);
    expect(state.items).toHaveLength(5); // nothing moved tabs
    expect(state.banner).toBeNull();
  });

  it('network failure shows a banner and the card stays undecided', async () => {
    const service = new FakeService(PIDS);
    const store = new QueueStore(service, 10);
    await store.refresh();
    service.failWith = new ApiError(0, 'service unreachable');
    const ok = await store.submit('keep');
    expect(ok).toBe(false);
    const state = store.snapshot();
    expect(state.banner).toContain('not saved');
    expect(state.items[0]?.effective_verdict).toBeNull();
  });

  it('allows at most one in-flight decision', async () => {
    const service = new FakeService(PIDS);
    const store = new QueueStore(service, 10);
    await store.refresh();
    const first = store.submit('keep');
    const second = store.submit('keep'); // rejected: first is still in flight
    const [a, b] = await Promise.all([first, second]);
    expect(a).toBe(true);
    expect(b).toBe(false);
    expect(service.decideCalls).toHaveLength(1);
  });

  it('tab switches reset pagination and focus', async () => {
    const service = new FakeService(PIDS);
    service.decisions.set('P2', 'reject');
    const store = new QueueStore(service, 2);
    await store.refresh();
    store.moveFocus(1);
    await store.setTab('rejected');
    const state = store.snapshot();
    expect(state.tab).toBe('rejected');
    expect(state.page).toBe(1);
    expect(state.focus).toBe(0);
    expect(state.items.map((c) => c.property_id)).toEqual(['P2']);
  });

  it('focus moves stay within the page', async () => {
    const store = new QueueStore(new FakeService(PIDS), 3);
    await store.refresh();
    store.moveFocus(-5);
    expect(store.snapshot().focus).toBe(0);
    store.moveFocus(99);
    expect(store.snapshot().focus).toBe(2);
  });

  it('a reload reconstructs identical queue state from the service', async () => {
    const service = new FakeService(PIDS);
    const first = new QueueStore(service, 3);
    await first.refresh();
    await first.submit('reject', 'triage test');

    const reloaded = new QueueStore(service, 3);
    await reloaded.refresh();
    expect(reloaded.snapshot()).toEqual(first.snapshot());
  });

  it('unreachable service on load sets the banner; retry recovers', async () => {
    const service = new FakeService(PIDS);
    const store = new QueueStore(service, 3);
    const broken = service.properties.bind(service);
    service.properties = async () => {
      throw new ApiError(0, 'service unreachable');
    };
    await store.refresh();
    expect(store.snapshot().banner).toContain('unreachable');

    service.properties = broken;
    await store.refresh();
    expect(store.snapshot().banner).toBeNull();
    expect(store.snapshot().items).toHaveLength(3);
  });
});
