"""Review HTTP API hosting the manual candidate-labeling step.

Decisions are durable before they are acknowledged: each POST appends to the
JSON-lines decision log and fsyncs, then mutates the in-memory lexicon and
saves it. On startup the log is replayed over the loaded lexicon, so a
decision acknowledged over HTTP survives a process crash either way.
"""

from __future__ import annotations

import dataclasses
import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import lexicon as lexicon_mod
from .config import PipelineConfig
from .embeddings import EmbeddingTable, load_embeddings
from .errors import ConflictError
from .features import lexicon_fingerprint
from .lexicon import CANDIDATE, Decision, Lexicon
from .normalize import match, tokenize


class DecisionBody(BaseModel):
    term: str
    decision: str
    reviewer: str = "anonymous"


class ReviewState:
    """Single-writer lexicon state behind the HTTP handlers."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.lock = threading.Lock()
        self.lexicon_path = cfg.resolve(cfg.paths.lexicon)
        self.log_path = cfg.resolve(cfg.paths.decision_log)
        self.lexicon: Lexicon = (
            lexicon_mod.load_lexicon(self.lexicon_path)
            if self.lexicon_path.exists() else Lexicon())
        self.table: EmbeddingTable | None = None
        if cfg.paths.embeddings is not None:
            self.table = load_embeddings(cfg.resolve(cfg.paths.embeddings))
        self.corpus = None
        if cfg.paths.corpus is not None:
            from .cli import _load_corpus
            self.corpus = _load_corpus(cfg)
        self._example_cache: dict[str, list[dict]] = {}
        self._replay_log()

    def _replay_log(self) -> None:
        if not self.log_path.exists():
            return
        for line in self.log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            decision = Decision(term=row["term"], decision=row["decision"],
                                reviewer=row.get("reviewer", ""), ts=row.get("ts", ""))
            try:
                self.lexicon.apply_decisions([decision])
            except (ConflictError, KeyError):
                # lexicon evolved out-of-band since this log line; keep going
                continue

    def append_log(self, decision: Decision) -> None:
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with self.log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(dataclasses.asdict(decision)) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def examples_for(self, term: str, cap: int) -> list[dict]:
        if self.corpus is None or cap <= 0:
            return []
        if term in self._example_cache:
            return self._example_cache[term]
        found: list[dict] = []
        for post in self.corpus:
            for token in tokenize(post.text):
                hit = match(token, [term], self.cfg.normalizer)
                if hit is not None:
                    found.append({"id": post.id, "text": post.text,
                                  "token": token.surface,
                                  "span": list(token.span), "kind": hit.kind})
                    break
            if len(found) >= cap:
                break
        self._example_cache[term] = found
        return found


def _entry_doc(e: lexicon_mod.LexiconEntry) -> dict:
    doc = {"term": e.term, "status": e.status, "source": e.source,
           "generation": e.generation}
    if e.evidence:
        doc["evidence"] = {"seed": e.evidence.seed,
                           "similarity": e.evidence.similarity}
    return doc


def create_app(cfg: PipelineConfig) -> FastAPI:
    state = ReviewState(cfg)
    app = FastAPI(title="adaptlex review API")
    app.state.review = state

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": "malformed body"})

    @app.get("/candidates")
    def candidates(generation: int | None = None,
                   page: int = Query(1, ge=1),
                   page_size: int | None = Query(None, ge=1, le=500)):
        size = page_size or cfg.service.page_size
        with state.lock:
            pending = [e for e in state.lexicon.entries.values()
                       if e.status == CANDIDATE
                       and (generation is None or e.generation == generation)]
        pending.sort(key=lambda e: (-(e.evidence.similarity if e.evidence else 0.0),
                                    e.term))
        total = len(pending)
        window = pending[(page - 1) * size: page * size]
        items = []
        for e in window:
            doc = _entry_doc(e)
            doc["examples"] = state.examples_for(e.term, cfg.service.example_cap)
            if state.table is not None and e.term in state.table:
                doc["neighbors"] = [
                    {"token": h.token, "similarity": h.similarity}
                    for h in state.table.neighbors(e.term, k=5, min_similarity=-1.0)
                ]
            else:
                doc["neighbors"] = []
            items.append(doc)
        return {"page": page, "page_size": size, "total": total, "items": items}

    @app.post("/decisions")
    def decide(body: DecisionBody):
        if body.decision not in ("accept", "reject"):
            return JSONResponse(status_code=400,
                                content={"error": f"unknown decision {body.decision!r}"})
        with state.lock:
            entry = state.lexicon.entries.get(body.term)
            if entry is None:
                return JSONResponse(status_code=404,
                                    content={"error": f"unknown term {body.term!r}"})
            decision = Decision(term=body.term, decision=body.decision,
                                reviewer=body.reviewer,
                                ts=datetime.now(timezone.utc).isoformat())
            try:
                # validate without mutating, then persist, then mutate
                probe = Lexicon()
                probe.entries = {body.term: lexicon_mod.LexiconEntry(
                    term=entry.term, status=entry.status, source=entry.source,
                    generation=entry.generation, evidence=entry.evidence)}
                probe.apply_decisions([decision])
            except ConflictError as exc:
                return JSONResponse(status_code=409,
                                    content={"error": str(exc),
                                             "status": entry.status})
            state.append_log(decision)
            state.lexicon.apply_decisions([decision])
            lexicon_mod.save_lexicon(state.lexicon, state.lexicon_path)
            counts = state.lexicon.counts()
            return {"entry": _entry_doc(state.lexicon.entries[body.term]),
                    "counts": counts}

    @app.get("/lexicon")
    def lexicon_overview(include_terms: bool = False):
        with state.lock:
            counts = state.lexicon.counts()
            doc = {"counts": counts,
                   "generations": state.lexicon.generation_summary()}
            if include_terms:
                doc["entries"] = [_entry_doc(e)
                                  for e in state.lexicon.entries.values()]
            return doc

    @app.get("/stats")
    def stats():
        with state.lock:
            counts = state.lexicon.counts()
            decided = counts["accepted"] + counts["rejected"]
            return {
                "max_generation": state.lexicon.max_generation(),
                "pending": counts["candidate"],
                "decided": decided,
                "accepted": counts["accepted"],
                "rejected": counts["rejected"],
                "seed": counts["seed"],
                "updated": counts["updated"],
                "decision_log_length": len(state.lexicon.decision_log),
                "thresholds": [{"generation": g, "threshold": t}
                               for g, t in state.lexicon.threshold_history],
            }

    @app.post("/expand")
    def run_expansion():
        if state.table is None:
            return JSONResponse(status_code=409,
                                content={"error": "no embeddings configured"})
        with state.lock:
            candidates, report = lexicon_mod.expand(
                state.lexicon, state.table,
                threshold=cfg.expansion.threshold,
                max_candidates_per_seed=cfg.expansion.max_candidates_per_seed)
            state.lexicon.add_candidates(candidates, threshold=cfg.expansion.threshold)
            lexicon_mod.save_lexicon(state.lexicon, state.lexicon_path)
            return {"generation": report.generation,
                    "candidates": len(candidates),
                    "sources_missing": report.sources_missing}

    ui_dir = cfg.resolve(cfg.service.ui_dir) if cfg.service.ui_dir else None
    if ui_dir is not None and ui_dir.exists():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
