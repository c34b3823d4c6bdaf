"""Seed-lexicon sanitation, embedding-driven expansion, and review decisions.

A Lexicon is a versioned, insertion-ordered set of terms. Seeds come from
sanitized published word lists (generation 0); expansion proposes candidate
terms whose embedding cosine against any seed/accepted term meets the
threshold; human review flips candidates to accepted or rejected. Rejected
terms are remembered forever so they can never re-enter the queue.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingTable
from .errors import ConflictError, InputError

SEED = "seed"
CANDIDATE = "candidate"
ACCEPTED = "accepted"
REJECTED = "rejected"
_STATUSES = (SEED, CANDIDATE, ACCEPTED, REJECTED)

# A sanitized word: lowercase ASCII letters with interior apostrophe/hyphen.
_WORD_SHAPE = re.compile(r"[a-z][a-z'-]*$")

# Deterministic base-form candidates for the optional wordlist check
# ("fucking" passes when the wordlist holds "fuck").
_SUFFIXES = ("'s", "es", "s", "ing", "ed")


@dataclass
class Evidence:
    seed: str
    similarity: float


@dataclass
class LexiconEntry:
    term: str
    status: str
    source: str = ""
    generation: int = 0
    evidence: Evidence | None = None

    def __post_init__(self):
        if self.status not in _STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == SEED) != (self.generation == 0):
            raise ValueError(f"{self.term!r}: status {self.status} inconsistent "
                             f"with generation {self.generation}")


@dataclass
class Decision:
    term: str
    decision: str  # accept | reject
    reviewer: str
    ts: str


@dataclass
class SanitizeReport:
    """Removal counts per sanitation rule, in rule-application order."""

    non_english: int = 0
    duplicates: int = 0
    stopwords: int = 0
    blocklisted: int = 0
    kept: int = 0


@dataclass
class ExpansionReport:
    generation: int
    threshold: float
    sources_used: int
    sources_missing: list[str] = field(default_factory=list)
    candidates: int = 0


class Lexicon:
    """Insertion-ordered term set; the insertion order is the frozen feature
    order (seeds in sanitized order, then accepted terms by generation then
    term)."""

    def __init__(self):
        self.entries: dict[str, LexiconEntry] = {}
        self.threshold_history: list[tuple[int, float]] = []
        self.decision_log: list[Decision] = []

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def add_entry(self, entry: LexiconEntry) -> None:
        if entry.term in self.entries:
            raise ValueError(f"duplicate term {entry.term!r}")
        self.entries[entry.term] = entry

    def max_generation(self) -> int:
        return max((e.generation for e in self.entries.values()), default=0)

    def seed_terms(self) -> list[str]:
        return [t for t, e in self.entries.items() if e.status == SEED]

    def active_terms(self) -> list[str]:
        """Seed plus accepted terms, in frozen insertion order (U_lexicons)."""
        return [t for t, e in self.entries.items() if e.status in (SEED, ACCEPTED)]

    def candidate_terms(self) -> list[str]:
        return [t for t, e in self.entries.items() if e.status == CANDIDATE]

    def counts(self) -> dict[str, int]:
        out = {s: 0 for s in _STATUSES}
        for e in self.entries.values():
            out[e.status] += 1
        out["updated"] = out[SEED] + out[ACCEPTED]
        return out

    def generation_summary(self) -> list[dict]:
        """Candidate/accepted/rejected counts per generation (Table-style
        bookkeeping; both candidate and accepted sizes are reported)."""
        gens: dict[int, dict] = {}
        thresholds = dict(self.threshold_history)
        for e in self.entries.values():
            g = gens.setdefault(e.generation, {
                "generation": e.generation,
                "threshold": thresholds.get(e.generation),
                "seed": 0, "candidate": 0, "accepted": 0, "rejected": 0,
            })
            g[e.status] += 1
        return [gens[k] for k in sorted(gens)]

    def add_candidates(self, candidates: list[LexiconEntry], threshold: float) -> None:
        """Merge freshly expanded candidates (single generation, term order)."""
        if not candidates:
            return
        gens = {c.generation for c in candidates}
        if len(gens) != 1:
            raise ValueError("candidates span multiple generations")
        generation = gens.pop()
        for entry in sorted(candidates, key=lambda c: c.term):
            if entry.status != CANDIDATE:
                raise ValueError(f"{entry.term!r}: expected candidate status")
            self.add_entry(entry)
        self.threshold_history.append((generation, float(threshold)))

    def apply_decisions(self, decisions: list[Decision]) -> "Lexicon":
        """Apply review decisions atomically; idempotent for repeats.

        A decision must target a pending candidate, or restate the term's
        existing decided status (accept on accepted / reject on rejected).
        Anything else raises ConflictError and nothing is applied.
        """
        resulting: dict[str, str] = {}
        for d in decisions:
            if d.decision not in ("accept", "reject"):
                raise ValueError(f"unknown decision {d.decision!r}")
            entry = self.entries.get(d.term)
            if entry is None:
                raise KeyError(f"unknown term {d.term!r}")
            status = resulting.get(d.term, entry.status)
            target = ACCEPTED if d.decision == "accept" else REJECTED
            if status == CANDIDATE or status == target:
                resulting[d.term] = target
            else:
                raise ConflictError(d.term, status, d.decision)
        for d in decisions:
            self.entries[d.term].status = resulting[d.term]
            self.decision_log.append(d)
        return self


def _read_terms_file(path: str | Path | None) -> set[str]:
    if path is None:
        return set()
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read term file {path}: {exc}") from exc
    terms = set()
    for line in lines:
        line = line.split("#", 1)[0].strip().lower()
        if line:
            terms.add(line)
    return terms


def _base_forms(word: str) -> list[str]:
    forms = [word]
    for suf in _SUFFIXES:
        if word.endswith(suf) and len(word) > len(suf) + 1:
            stem = word[: -len(suf)]
            forms.append(stem)
            if suf in ("ing", "ed"):
                if len(stem) >= 2 and stem[-1] == stem[-2]:
                    forms.append(stem[:-1])  # runn -> run
                forms.append(stem + "e")     # hat(ing) -> hate
    return forms


def _passes_english_rule(term: str, wordlist: set[str] | None) -> bool:
    words = term.split()
    if not words:
        return False
    for w in words:
        if not _WORD_SHAPE.match(w):
            return False
        if wordlist and not any(f in wordlist for f in _base_forms(w)):
            return False
    return True


def sanitize(raw_lists: list[tuple[str, list[str]]],
             stopword_file: str | Path | None = None,
             contextual_blocklist_file: str | Path | None = None,
             wordlist_file: str | Path | None = None,
             ) -> tuple[Lexicon, SanitizeReport]:
    """Build the seed lexicon from raw lists.

    Rules apply in order per term: (1) drop terms failing the English
    alphabet/wordlist rule, (2) lowercase, (3) deduplicate across lists with
    the first source winning, (4) drop stopwords and contextual-blocklist
    terms. Survivors are status=seed, generation=0.
    """
    if not raw_lists:
        raise ValueError("at least one raw lexicon list is required")
    stopwords = _read_terms_file(stopword_file)
    blocklist = _read_terms_file(contextual_blocklist_file)
    wordlist = _read_terms_file(wordlist_file) or None

    report = SanitizeReport()
    lexicon = Lexicon()
    seen: set[str] = set()
    for source, terms in raw_lists:
        for raw in terms:
            term = " ".join(raw.strip().lower().split())
            if not term or not _passes_english_rule(term, wordlist):
                report.non_english += 1
                continue
            if term in seen:
                report.duplicates += 1
                continue
            seen.add(term)
            if term in stopwords:
                report.stopwords += 1
                continue
            if term in blocklist:
                report.blocklisted += 1
                continue
            lexicon.add_entry(LexiconEntry(term=term, status=SEED, source=source))
    report.kept = len(lexicon)
    if not lexicon.entries:
        raise InputError("sanitation removed every term; expansion would be meaningless")
    return lexicon, report


def expand(lexicon: Lexicon, table: EmbeddingTable, threshold: float = 0.75,
           max_candidates_per_seed: int = 25,
           ) -> tuple[list[LexiconEntry], ExpansionReport]:
    """Propose candidate terms: vocabulary tokens whose best cosine against a
    seed/accepted term meets the threshold.

    Evidence records the best-matching source term. Terms already in the
    lexicon under any status (including rejected) never reappear; per-source
    output is capped at max_candidates_per_seed before the union.
    """
    if not lexicon.entries:
        raise ValueError("cannot expand an empty lexicon")
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if max_candidates_per_seed < 1:
        raise ValueError("max_candidates_per_seed must be positive")

    generation = lexicon.max_generation() + 1
    sources = lexicon.active_terms()
    present = [s for s in sources if s in table]
    missing = [s for s in sources if s not in table]

    best: dict[str, Evidence] = {}
    for src in present:
        sims = table.similarities_to(src)
        order = np.argsort(-sims, kind="stable")
        taken = 0
        for idx in order:
            tok = table.tokens[int(idx)]
            sim = float(sims[int(idx)])
            if sim < threshold:
                break
            if tok == src or tok in lexicon:
                continue
            if taken >= max_candidates_per_seed:
                break
            taken += 1
            prev = best.get(tok)
            if prev is None or sim > prev.similarity or (
                    sim == prev.similarity and src < prev.seed):
                best[tok] = Evidence(seed=src, similarity=sim)

    candidates = [
        LexiconEntry(term=tok, status=CANDIDATE, source=f"expansion:{table.source or 'table'}",
                     generation=generation, evidence=ev)
        for tok, ev in best.items()
    ]
    candidates.sort(key=lambda c: (-c.evidence.similarity, c.term))
    report = ExpansionReport(generation=generation, threshold=threshold,
                             sources_used=len(present), sources_missing=missing,
                             candidates=len(candidates))
    return candidates, report


def apply_decisions(lexicon: Lexicon, decisions: list[Decision]) -> Lexicon:
    """Module-level alias for Lexicon.apply_decisions."""
    return lexicon.apply_decisions(decisions)


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    doc = {
        "version": 1,
        "thresholds": [
            {"generation": g, "threshold": t} for g, t in lexicon.threshold_history
        ],
        "entries": [
            {
                "term": e.term,
                "status": e.status,
                "source": e.source,
                "generation": e.generation,
                **({"evidence": {"seed": e.evidence.seed,
                                 "similarity": e.evidence.similarity}}
                   if e.evidence else {}),
            }
            for e in lexicon.entries.values()
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read lexicon file {path}: {exc}") from exc
    if not text.strip():
        return Lexicon()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid lexicon JSON ({exc.msg})") from exc
    lexicon = Lexicon()
    for g in doc.get("thresholds", []):
        lexicon.threshold_history.append((int(g["generation"]), float(g["threshold"])))
    for i, raw in enumerate(doc.get("entries", [])):
        try:
            evidence = None
            if "evidence" in raw and raw["evidence"] is not None:
                evidence = Evidence(seed=raw["evidence"]["seed"],
                                    similarity=float(raw["evidence"]["similarity"]))
            entry = LexiconEntry(term=raw["term"], status=raw["status"],
                                 source=raw.get("source", ""),
                                 generation=int(raw.get("generation", 0)),
                                 evidence=evidence)
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"{path}: entry {i}: {exc}") from exc
        if entry.term in lexicon.entries:
            raise InputError(f"{path}: duplicate term {entry.term!r}")
        lexicon.add_entry(entry)
    return lexicon
