// Pure HTML builders; kept DOM-free so they are unit-testable.

import type { CandidateItem, CardState, ExamplePost, GenerationRow, LexiconCounts } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Similarity is always shown to exactly 3 decimals, matching the API value. */
export function formatSimilarity(value: number): string {
  return value.toFixed(3);
}

/** Example post with the matched token wrapped in a highlight span. */
export function highlightExample(example: ExamplePost): string {
  const [start, end] = example.span;
  const text = example.text;
  if (start < 0 || end > text.length || start >= end) {
    return escapeHtml(text);
  }
  return (
    escapeHtml(text.slice(0, start)) +
    `<mark>${escapeHtml(text.slice(start, end))}</mark>` +
    escapeHtml(text.slice(end))
  );
}

export function candidateCard(item: CandidateItem, card: CardState): string {
  const submitting = card.phase === "submitting";
  const evidence = item.evidence
    ? `nearest seed <b>${escapeHtml(item.evidence.seed)}</b> @ ` +
      `<span class="sim">${formatSimilarity(item.evidence.similarity)}</span>`
    : "no evidence";
  const neighbors = item.neighbors
    .map((n) => `${escapeHtml(n.token)} (${formatSimilarity(n.similarity)})`)
    .join(", ");
  const examples = item.examples
    .map((e) => `<li class="example">${highlightExample(e)} <span class="kind">[${escapeHtml(e.kind)}]</span></li>`)
    .join("");
  const failed =
    card.phase === "failed"
      ? `<div class="error">decision failed: ${escapeHtml(card.message)} ` +
        `<button data-action="retry" data-term="${escapeHtml(item.term)}">retry</button></div>`
      : "";
  return `
  <article class="card" data-card="${escapeHtml(item.term)}">
    <header>
      <h3>${escapeHtml(item.term)}</h3>
      <span class="generation">gen ${item.generation}</span>
    </header>
    <p class="evidence">${evidence}</p>
    <p class="neighbors">neighbors: ${neighbors || "none"}</p>
    <ul class="examples">${examples || "<li class='example none'>no example posts</li>"}</ul>
    <footer>
      <button data-action="accept" data-term="${escapeHtml(item.term)}"
        ${submitting ? "disabled" : ""}>accept</button>
      <button data-action="reject" data-term="${escapeHtml(item.term)}"
        ${submitting ? "disabled" : ""}>reject</button>
      ${submitting ? '<span class="pending">submitting…</span>' : ""}
    </footer>
    ${failed}
  </article>`;
}

export function lexiconOverviewTable(counts: LexiconCounts, generations: GenerationRow[]): string {
  const rows = generations
    .map(
      (g) => `
    <tr>
      <td>${g.generation}</td>
      <td>${g.threshold === null ? "—" : g.threshold}</td>
      <td>${g.seed}</td><td>${g.candidate}</td><td>${g.accepted}</td><td>${g.rejected}</td>
    </tr>`,
    )
    .join("");
  return `
  <p class="sizes">
    S (seed): <b data-count="seed">${counts.seed}</b> ·
    U (seed + accepted): <b data-count="updated">${counts.updated}</b> ·
    pending: <b data-count="candidate">${counts.candidate}</b> ·
    rejected: <b data-count="rejected">${counts.rejected}</b>
  </p>
  <table>
    <thead><tr><th>gen</th><th>threshold</th><th>seed</th><th>candidate</th>
      <th>accepted</th><th>rejected</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>`;
}

export function emptyQueue(expanding: boolean): string {
  return `
  <div class="empty">
    <p>No candidates waiting for review.</p>
    <button data-action="expand" ${expanding ? "disabled" : ""}>
      ${expanding ? "expanding…" : "run next expansion"}
    </button>
  </div>`;
}
