// DOM wiring: render the store state, forward clicks to store actions.

import { ReviewApi } from "./api.js";
import { candidateCard, emptyQueue, lexiconOverviewTable } from "./render.js";
import { ReviewStore } from "./store.js";
import type { StoreState } from "./store.js";

const api = new ReviewApi();
const store = new ReviewStore(api, "ui-reviewer");

const queueEl = document.getElementById("queue")!;
const overviewEl = document.getElementById("overview")!;
const statsEl = document.getElementById("stats")!;
const pagerEl = document.getElementById("pager")!;
const bannerEl = document.getElementById("banner")!;

function render(state: StoreState): void {
  bannerEl.textContent = state.banner ?? "";
  bannerEl.hidden = !state.banner;

  if (state.loading && state.queue.length === 0) {
    queueEl.innerHTML = '<p class="loading">loading…</p>';
  } else if (state.queue.length === 0) {
    queueEl.innerHTML = emptyQueue(state.expanding);
  } else {
    queueEl.innerHTML = state.queue
      .map((item) => candidateCard(item, store.cardState(item.term)))
      .join("\n");
  }

  if (state.overview) {
    overviewEl.innerHTML = lexiconOverviewTable(
      state.overview.counts,
      state.overview.generations,
    );
  }

  if (state.stats) {
    const s = state.stats;
    statsEl.innerHTML = `
      <dl>
        <dt>generation</dt><dd>${s.max_generation}</dd>
        <dt>pending</dt><dd>${s.pending}</dd>
        <dt>decided</dt><dd>${s.decided} (${s.accepted} accepted / ${s.rejected} rejected)</dd>
        <dt>decision log</dt><dd>${s.decision_log_length}</dd>
      </dl>`;
  }

  const lastPage = Math.max(1, Math.ceil(state.total / state.pageSize));
  pagerEl.innerHTML =
    state.total > 0
      ? `<button data-action="prev" ${state.page <= 1 ? "disabled" : ""}>prev</button>
         <span>page ${state.page} / ${lastPage} (${state.total} pending)</span>
         <button data-action="next" ${state.page >= lastPage ? "disabled" : ""}>next</button>`
      : "";
}

document.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  const action = target.dataset.action;
  if (!action) return;
  const term = target.dataset.term;
  if (action === "accept" && term) void store.decide(term, "accept");
  else if (action === "reject" && term) void store.decide(term, "reject");
  else if (action === "retry" && term) void store.retry(term);
  else if (action === "expand") void store.runExpansion();
  else if (action === "prev") void store.goToPage(store.getState().page - 1);
  else if (action === "next") void store.goToPage(store.getState().page + 1);
});

store.subscribe(render);
void store.refresh(1);
