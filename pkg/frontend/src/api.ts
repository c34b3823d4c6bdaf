// Thin typed client over the review HTTP API. The fetch implementation is
// injectable so tests can run against an in-memory server.

import type {
  CandidatePage,
  DecisionKind,
  DecisionResponse,
  ExpandResponse,
  LexiconOverview,
  Stats,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function parseJson(resp: Response): Promise<unknown> {
  const text = await resp.text();
  try {
    return text ? JSON.parse(text) : {};
  } catch {
    return {};
  }
}

export class ReviewApi {
  constructor(
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private base: string = "",
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.base + path);
    if (!resp.ok) {
      throw new ApiError(resp.status, `GET ${path} -> ${resp.status}`);
    }
    return (await parseJson(resp)) as T;
  }

  candidates(page: number, pageSize?: number, generation?: number): Promise<CandidatePage> {
    const params = new URLSearchParams({ page: String(page) });
    if (pageSize !== undefined) params.set("page_size", String(pageSize));
    if (generation !== undefined) params.set("generation", String(generation));
    return this.get<CandidatePage>(`/candidates?${params}`);
  }

  lexicon(): Promise<LexiconOverview> {
    return this.get<LexiconOverview>("/lexicon");
  }

  stats(): Promise<Stats> {
    return this.get<Stats>("/stats");
  }

  async decide(term: string, decision: DecisionKind, reviewer: string): Promise<DecisionResponse> {
    const resp = await this.fetchImpl(`${this.base}/decisions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ term, decision, reviewer }),
    });
    const body = (await parseJson(resp)) as Record<string, unknown>;
    if (!resp.ok) {
      const message = typeof body.error === "string" ? body.error : `POST /decisions -> ${resp.status}`;
      throw new ApiError(resp.status, message);
    }
    return body as unknown as DecisionResponse;
  }

  async expand(): Promise<ExpandResponse> {
    const resp = await this.fetchImpl(`${this.base}/expand`, { method: "POST" });
    if (!resp.ok) {
      throw new ApiError(resp.status, `POST /expand -> ${resp.status}`);
    }
    return (await parseJson(resp)) as ExpandResponse;
  }
}
