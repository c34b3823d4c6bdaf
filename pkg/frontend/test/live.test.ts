// Scripted session against a real running review API (the python service).
// Skipped unless ADAPTLEX_API_URL is set; scripts/run-live-e2e.sh boots the
// server on a fixture workspace and runs just this file.

import { describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { ReviewStore } from "../src/store.js";

const base = process.env.ADAPTLEX_API_URL;

describe.skipIf(!base)("live review session", () => {
  const api = () => new ReviewApi((url, init) => fetch(url, init), base);

  it("accepts one and rejects one; counts match GET /lexicon", async () => {
    const store = new ReviewStore(api(), "live-e2e");
    await store.refresh(1);
    const queue = store.getState().queue;
    expect(queue.length).toBeGreaterThanOrEqual(2);
    const [first, second] = queue;

    await store.decide(first.term, "accept");
    await store.decide(second.term, "reject");

    const state = store.getState();
    expect(state.queue.every((c) => c.term !== first.term)).toBe(true);
    expect(state.queue.every((c) => c.term !== second.term)).toBe(true);

    const fresh = await api().lexicon();
    expect(state.overview?.counts).toEqual(fresh.counts);
    expect(fresh.counts.accepted).toBeGreaterThanOrEqual(1);
    expect(fresh.counts.rejected).toBeGreaterThanOrEqual(1);
  });

  it("rapid clicking produces exactly one decision log entry", async () => {
    const store = new ReviewStore(api(), "live-e2e");
    await store.refresh(1);
    const target = store.getState().queue[0];
    expect(target).toBeDefined();

    const before = (await api().stats()).decision_log_length;
    await Promise.all([
      store.decide(target.term, "accept"),
      store.decide(target.term, "accept"),
      store.decide(target.term, "accept"),
      store.decide(target.term, "accept"),
    ]);
    const after = (await api().stats()).decision_log_length;
    expect(after - before).toBe(1);
  });
});
