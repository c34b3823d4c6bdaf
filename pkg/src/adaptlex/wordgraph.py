"""Word-similarity graph and Louvain community detection.

Words become nodes; an edge connects two words when the cosine similarity of
their vectors meets the threshold. Communities that contain known toxic
terms are flagged as advisory candidate sources. This path over-generates
(no context specificity), so its output is a report, never an automatic
lexicon update.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingTable
from .lexicon import CANDIDATE, Evidence, Lexicon, LexiconEntry


@dataclass
class WordGraph:
    """Undirected weighted graph; each edge stored once with u < v."""

    nodes: list[str]
    edges: dict[tuple[str, str], float] = field(default_factory=dict)

    def add_edge(self, u: str, v: str, weight: float) -> None:
        if u == v:
            raise ValueError("self-loops are not allowed")
        key = (u, v) if u < v else (v, u)
        self.edges[key] = float(weight)

    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (u, v), w in self.edges.items():
            adj[u][v] = w
            adj[v][u] = w
        return adj

    def save_edges(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for (u, v) in sorted(self.edges):
                fh.write(f"{u}\t{v}\t{self.edges[(u, v)]:.17g}\n")


@dataclass
class Partition:
    assignment: dict[str, int]
    modularity: float


@dataclass
class FlaggedCommunity:
    community_id: int
    toxic_count: int
    members: list[str]
    candidates: list[LexiconEntry] = field(default_factory=list)


def build_graph(table: EmbeddingTable, vocab: list[str], threshold: float = 0.75
                ) -> WordGraph:
    """Exact O(n^2) pairwise construction: edge (u,v) iff cosine >= threshold."""
    missing = [t for t in vocab if t not in table]
    if missing:
        raise KeyError(f"vocab tokens missing from table: {sorted(missing)}")
    nodes = list(dict.fromkeys(vocab))
    graph = WordGraph(nodes=nodes)
    if len(nodes) < 2:
        return graph
    mat = np.vstack([table.vector(t).astype(np.float64) for t in nodes])
    norms = np.linalg.norm(mat, axis=1)
    sims = (mat @ mat.T) / np.outer(norms, norms)
    n = len(nodes)
    for i in range(n):
        row = sims[i]
        for j in range(i + 1, n):
            if row[j] >= threshold:
                graph.add_edge(nodes[i], nodes[j], float(row[j]))
    return graph


def modularity(graph: WordGraph, assignment: dict[str, int],
               resolution: float = 1.0) -> float:
    """Newman modularity of a node->community assignment, from scratch.

    Q = sum_c [ W_in(c)/m - resolution * (d_c / 2m)^2 ], with m the total
    edge weight and d the weighted degree. An edgeless graph has Q = 0.
    """
    m = sum(graph.edges.values())
    if m == 0:
        return 0.0
    degree: dict[str, float] = {n: 0.0 for n in graph.nodes}
    internal: dict[int, float] = {}
    total: dict[int, float] = {}
    for (u, v), w in graph.edges.items():
        degree[u] += w
        degree[v] += w
        if assignment[u] == assignment[v]:
            internal[assignment[u]] = internal.get(assignment[u], 0.0) + w
    for node, k in degree.items():
        c = assignment[node]
        total[c] = total.get(c, 0.0) + k
    q = 0.0
    for c, d_c in total.items():
        q += internal.get(c, 0.0) / m - resolution * (d_c / (2.0 * m)) ** 2
    return q


def _one_level(adj: list[dict[int, float]], k: list[float], m: float,
               comm: list[int], sigma_tot: list[float], rng: random.Random,
               resolution: float) -> bool:
    """Local-move phase; mutates comm/sigma_tot, returns True if anything moved."""
    n = len(adj)
    order = list(range(n))
    rng.shuffle(order)
    improved = False
    moved = True
    while moved:
        moved = False
        for i in order:
            c_old = comm[i]
            links: dict[int, float] = {}
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] = links.get(comm[j], 0.0) + w
            sigma_tot[c_old] -= k[i]
            best_c = c_old
            best_gain = links.get(c_old, 0.0) / m - resolution * sigma_tot[c_old] * k[i] / (2.0 * m * m)
            for c in sorted(links):
                if c == c_old:
                    continue
                gain = links[c] / m - resolution * sigma_tot[c] * k[i] / (2.0 * m * m)
                if gain > best_gain + 1e-15:
                    best_gain, best_c = gain, c
            comm[i] = best_c
            sigma_tot[best_c] += k[i]
            if best_c != c_old:
                moved = True
                improved = True
    return improved


def louvain(graph: WordGraph, seed: int = 0, resolution: float = 1.0) -> Partition:
    """Two-phase Louvain: seeded local moves, then graph aggregation, until
    no move improves modularity. Deterministic for a fixed seed; isolated
    nodes end up in singleton communities."""
    if not graph.nodes:
        raise ValueError("cannot partition an empty graph")
    rng = random.Random(seed)
    nodes = list(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}

    adj: list[dict[int, float]] = [{} for _ in nodes]
    for (u, v), w in graph.edges.items():
        adj[index[u]][index[v]] = adj[index[u]].get(index[v], 0.0) + w
        adj[index[v]][index[u]] = adj[index[v]].get(index[u], 0.0) + w

    m = sum(graph.edges.values())
    if m == 0:
        assignment = {n: i for i, n in enumerate(sorted(nodes))}
        return Partition(assignment={n: assignment[n] for n in nodes}, modularity=0.0)

    # membership[i] = current community of ORIGINAL node i
    membership = list(range(len(nodes)))

    cur_adj = adj
    while True:
        n_cur = len(cur_adj)
        k = [sum(w for j, w in cur_adj[i].items() if j != i) + 2.0 * cur_adj[i].get(i, 0.0)
             for i in range(n_cur)]
        comm = list(range(n_cur))
        sigma_tot = list(k)
        improved = _one_level(cur_adj, k, m, comm, sigma_tot, rng, resolution)
        if not improved:
            break
        # compact community ids in order of first appearance
        remap: dict[int, int] = {}
        for c in comm:
            if c not in remap:
                remap[c] = len(remap)
        comm = [remap[c] for c in comm]
        membership = [comm[membership[i]] for i in range(len(nodes))]
        if len(remap) == n_cur:
            break
        # aggregate: communities become nodes; intra weight -> self-loop
        new_adj: list[dict[int, float]] = [{} for _ in range(len(remap))]
        for i in range(n_cur):
            ci = comm[i]
            for j, w in cur_adj[i].items():
                cj = comm[j]
                if i == j:
                    new_adj[ci][ci] = new_adj[ci].get(ci, 0.0) + w
                elif i < j:
                    if ci == cj:
                        new_adj[ci][ci] = new_adj[ci].get(ci, 0.0) + w
                    else:
                        new_adj[ci][cj] = new_adj[ci].get(cj, 0.0) + w
                        new_adj[cj][ci] = new_adj[cj].get(ci, 0.0) + w
        cur_adj = new_adj

    # renumber communities by first appearance over lexicographic node order
    final: dict[str, int] = {}
    remap2: dict[int, int] = {}
    for node in sorted(nodes):
        c = membership[index[node]]
        if c not in remap2:
            remap2[c] = len(remap2)
    for node in nodes:
        final[node] = remap2[membership[index[node]]]
    return Partition(assignment=final, modularity=modularity(graph, final, resolution))


def flag_communities(graph: WordGraph, partition: Partition, lexicon: Lexicon
                     ) -> list[FlaggedCommunity]:
    """Communities containing at least one seed/accepted term, sorted by
    toxic membership descending.

    Members outside the lexicon become low-confidence candidates whose
    evidence similarity is the max edge weight to a toxic co-member (0.0 if
    only community co-membership connects them). Advisory output only; the
    pipeline never merges these into the lexicon automatically.
    """
    toxic = set(lexicon.active_terms())
    members: dict[int, list[str]] = {}
    for node, c in partition.assignment.items():
        members.setdefault(c, []).append(node)
    adj = graph.adjacency()
    generation = lexicon.max_generation() + 1

    flagged: list[FlaggedCommunity] = []
    for c, nodes in members.items():
        toxic_members = [n for n in nodes if n in toxic]
        if not toxic_members:
            continue
        fc = FlaggedCommunity(community_id=c, toxic_count=len(toxic_members),
                              members=sorted(nodes))
        for node in fc.members:
            if node in lexicon:
                continue
            best_seed, best_w = None, 0.0
            for t in sorted(toxic_members):
                w = adj[node].get(t, 0.0)
                if w > best_w:
                    best_seed, best_w = t, w
            evidence = Evidence(seed=best_seed or sorted(toxic_members)[0],
                                similarity=best_w)
            fc.candidates.append(LexiconEntry(
                term=node, status=CANDIDATE, source="graph-community",
                generation=generation, evidence=evidence))
        flagged.append(fc)
    flagged.sort(key=lambda f: (-f.toxic_count, f.community_id))
    return flagged


def save_partition(partition: Partition, path: str | Path) -> None:
    doc = {tok: partition.assignment[tok] for tok in sorted(partition.assignment)}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
