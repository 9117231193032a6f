import { ApiError } from './api.js';
import type { Decision, PageResponse, PropertyCard, Stats, Tab } from './types.js';

/** What the store needs from the service client; TriageApi satisfies it. */
export interface TriageClient {
  properties(status: Tab, page: number, pageSize: number): Promise<PageResponse>;
  decide(propertyId: string, verdict: Decision, reason: string): Promise<PropertyCard>;
  stats(): Promise<Stats>;
}

/** Quick-pick reject reasons matching the three heuristic categories. */
export const REASON_CHIPS = [
  'links to URLs or media files',
  'answer already contained in the question',
  'too vague or structural to answer',
];

export interface QueueState {
  tab: Tab;
  page: number;
  pageCount: number;
  total: number;
  items: PropertyCard[];
  focus: number;
  stats: Stats | null;
  /** service unreachable or other fatal load problem; retry re-fetches */
  banner: string | null;
  /** decision-level error shown on the focused card without moving it */
  inlineError: string | null;
  /** property id of the single allowed in-flight decision */
  inFlight: string | null;
  /** reject-reason editor open for the focused card */
  rejecting: boolean;
  loading: boolean;
}

type Listener = (state: QueueState) => void;

export class QueueStore {
  private state: QueueState = {
    tab: 'pending',
    page: 1,
    pageCount: 1,
    total: 0,
    items: [],
    focus: 0,
    stats: null,
    banner: null,
    inlineError: null,
    inFlight: null,
    rejecting: false,
    loading: false,
  };

  private listeners: Listener[] = [];

  constructor(
    private readonly api: TriageClient,
    private readonly pageSize: number = 20,
  ) {}

  snapshot(): QueueState {
    return { ...this.state, items: [...this.state.items] };
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.snapshot());
  }

  private patch(partial: Partial<QueueState>): void {
    this.state = { ...this.state, ...partial };
    this.notify();
  }

  /** Re-fetch stats and the current page; everything shown comes from the server. */
  async refresh(): Promise<void> {
    this.patch({ loading: true });
    try {
      const [stats, pageData] = await Promise.all([
        this.api.stats(),
        this.api.properties(this.state.tab, this.state.page, this.pageSize),
      ]);
      const focus = Math.min(this.state.focus, Math.max(0, pageData.items.length - 1));
      this.patch({
        stats,
        items: pageData.items,
        page: pageData.page,
        pageCount: pageData.page_count,
        total: pageData.total,
        focus,
        banner: null,
        loading: false,
      });
    } catch (err) {
      this.patch({
        banner: err instanceof ApiError ? err.message : 'failed to load queue',
        loading: false,
      });
    }
  }

  async setTab(tab: Tab): Promise<void> {
    if (tab === this.state.tab) return;
    this.patch({ tab, page: 1, focus: 0, rejecting: false, inlineError: null });
    await this.refresh();
  }

  async setPage(page: number): Promise<void> {
    const clamped = Math.max(1, Math.min(page, this.state.pageCount));
    if (clamped === this.state.page) return;
    this.patch({ page: clamped, focus: 0, rejecting: false, inlineError: null });
    await this.refresh();
  }

  focusedCard(): PropertyCard | null {
    return this.state.items[this.state.focus] ?? null;
  }

  moveFocus(delta: number): void {
    if (!this.state.items.length) return;
    const focus = Math.max(0, Math.min(this.state.items.length - 1, this.state.focus + delta));
    this.patch({ focus, rejecting: false, inlineError: null });
  }

  openReject(): void {
    if (this.focusedCard()) this.patch({ rejecting: true, inlineError: null });
  }

  closeReject(): void {
    this.patch({ rejecting: false });
  }

  /**
   * Submit a decision for the focused card. The card is never shown as
   * decided before the server acknowledges; on success the queue and stats
   * are re-fetched so the view always mirrors the ledger.
   */
  async submit(verdict: Decision, reason = ''): Promise<boolean> {
    const card = this.focusedCard();
    if (!card || this.state.inFlight) return false;
    if (verdict === 'reject' && !reason.trim()) {
      this.patch({ inlineError: 'a reject decision needs a reason' });
      return false;
    }
    this.patch({ inFlight: card.property_id, inlineError: null });
    try {
      await this.api.decide(card.property_id, verdict, reason.trim());
    } catch (err) {
      if (err instanceof ApiError && err.status === 0) {
        this.patch({ inFlight: null, banner: 'service unreachable; decision not saved' });
      } else {
        // 4xx: surface inline, keep the queue position
        const message = err instanceof ApiError ? err.message : 'decision failed';
        this.patch({ inFlight: null, inlineError: message });
      }
      return false;
    }
    this.patch({ inFlight: null, rejecting: false });
    await this.refresh();
    return true;
  }
}
