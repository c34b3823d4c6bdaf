// Queue state machine for the review session. Framework-free so the whole
// decision flow (optimistic updates, in-flight dedup, 409 reconciliation)
// is testable without a DOM.

import { ApiError, ReviewApi } from "./api.js";
import type {
  CandidateItem,
  CardState,
  DecisionKind,
  LexiconOverview,
  Stats,
} from "./types.js";

export interface StoreState {
  queue: CandidateItem[];
  cardStates: Map<string, CardState>;
  page: number;
  pageSize: number;
  total: number;
  overview: LexiconOverview | null;
  stats: Stats | null;
  loading: boolean;
  banner: string | null;
  expanding: boolean;
}

type Listener = (state: StoreState) => void;

export class ReviewStore {
  private state: StoreState = {
    queue: [],
    cardStates: new Map(),
    page: 1,
    pageSize: 20,
    total: 0,
    overview: null,
    stats: null,
    loading: false,
    banner: null,
    expanding: false,
  };
  private listeners: Listener[] = [];
  private inFlight = new Set<string>();

  constructor(
    private api: ReviewApi,
    public reviewer: string = "reviewer",
  ) {}

  getState(): StoreState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  private patch(partial: Partial<StoreState>): void {
    this.state = { ...this.state, ...partial };
    this.emit();
  }

  cardState(term: string): CardState {
    return this.state.cardStates.get(term) ?? { phase: "idle" };
  }

  async refresh(page = this.state.page): Promise<void> {
    this.patch({ loading: true, banner: null });
    try {
      const [candidates, overview, stats] = await Promise.all([
        this.api.candidates(page, this.state.pageSize),
        this.api.lexicon(),
        this.api.stats(),
      ]);
      // a page beyond the end (after decisions shrank the queue) snaps back
      const lastPage = Math.max(1, Math.ceil(candidates.total / candidates.page_size));
      if (candidates.items.length === 0 && candidates.total > 0 && page > lastPage) {
        return this.refresh(lastPage);
      }
      this.patch({
        queue: candidates.items,
        cardStates: new Map(),
        page: candidates.page,
        pageSize: candidates.page_size,
        total: candidates.total,
        overview,
        stats,
        loading: false,
      });
    } catch (err) {
      this.patch({ loading: false, banner: `failed to load queue: ${String(err)}` });
    }
  }

  /** Accept or reject one candidate. Exactly one POST per term is ever in
   * flight: repeated clicks while submitting are dropped. */
  async decide(term: string, decision: DecisionKind): Promise<void> {
    if (this.inFlight.has(term)) return;
    if (!this.state.queue.some((c) => c.term === term)) return;
    this.inFlight.add(term);
    this.setCard(term, { phase: "submitting", decision });
    try {
      const resp = await this.api.decide(term, decision, this.reviewer);
      // server acknowledged: drop the card, trust the returned counts
      const queue = this.state.queue.filter((c) => c.term !== term);
      const cardStates = new Map(this.state.cardStates);
      cardStates.delete(term);
      const overview = this.state.overview
        ? { ...this.state.overview, counts: resp.counts }
        : this.state.overview;
      const stats = this.state.stats
        ? {
            ...this.state.stats,
            pending: resp.counts.candidate,
            accepted: resp.counts.accepted,
            rejected: resp.counts.rejected,
            decided: resp.counts.accepted + resp.counts.rejected,
            updated: resp.counts.updated,
          }
        : this.state.stats;
      this.patch({ queue, cardStates, total: Math.max(0, this.state.total - 1), overview, stats });
      if (queue.length === 0 && this.state.total > 0) {
        await this.refresh();
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone else decided this card; server state wins
        await this.refresh();
      } else {
        this.setCard(term, {
          phase: "failed",
          decision,
          message: err instanceof Error ? err.message : String(err),
        });
      }
    } finally {
      this.inFlight.delete(term);
    }
  }

  /** Retry affordance for a failed decision; never auto-resent. */
  async retry(term: string): Promise<void> {
    const card = this.cardState(term);
    if (card.phase !== "failed") return;
    await this.decide(term, card.decision);
  }

  async runExpansion(): Promise<void> {
    if (this.state.expanding) return;
    this.patch({ expanding: true, banner: null });
    try {
      const resp = await this.api.expand();
      await this.refresh(1);
      this.patch({ expanding: false, banner: `generation ${resp.generation}: ${resp.candidates} new candidates` });
    } catch (err) {
      this.patch({ expanding: false, banner: `expansion failed: ${String(err)}` });
    }
  }

  async goToPage(page: number): Promise<void> {
    if (page < 1) return;
    await this.refresh(page);
  }

  private setCard(term: string, state: CardState): void {
    const cardStates = new Map(this.state.cardStates);
    cardStates.set(term, state);
    this.patch({ cardStates });
  }
}
