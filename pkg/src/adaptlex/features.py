"""Hybrid feature construction: binary lexicon-presence flags concatenated
with a dense document embedding.

The flag block uses a frozen term order (lexicon insertion order) whose
sha256 fingerprint binds matrices and trained models to one lexicon version;
anything trained against a stale fingerprint refuses to run. The dense block
comes either from mean-pooled table vectors or from externally precomputed
per-post vectors (e.g. transformer output produced out-of-band).
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LabeledCorpus
from .embeddings import EmbeddingTable
from .errors import InputError
from .lexicon import Lexicon
from .normalize import MatchResult, NormalizerConfig, match, tokenize


def lexicon_fingerprint(terms: list[str]) -> str:
    digest = hashlib.sha256("\n".join(terms).encode("utf-8")).hexdigest()
    return digest[:16]


class ExternalVectors:
    """Per-post dense vectors from a JSONL file: header {dims}, then
    {id, vector: [...]} lines."""

    def __init__(self, dims: int, vectors: dict[str, np.ndarray]):
        self.dims = dims
        self.vectors = vectors

    @classmethod
    def load(cls, path: str | Path) -> "ExternalVectors":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise InputError(f"cannot read external vectors {path}: {exc}") from exc
        if not lines:
            raise InputError(f"{path}: empty external vectors file")
        header = json.loads(lines[0])
        if "dims" not in header:
            raise InputError(f"{path}:1: header line must declare dims")
        dims = int(header["dims"])
        vectors: dict[str, np.ndarray] = {}
        for i, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            row = json.loads(line)
            vec = np.asarray(row["vector"], dtype=np.float64)
            if vec.size != dims:
                raise InputError(f"{path}:{i}: vector has {vec.size} dims, "
                                 f"header declares {dims}")
            vectors[str(row["id"])] = vec
        return cls(dims, vectors)

    def get(self, post_id: str | None) -> np.ndarray:
        if post_id is None or post_id not in self.vectors:
            raise InputError(f"no external dense vector for post id {post_id!r}")
        return self.vectors[post_id]


@dataclass
class FeatureVector:
    lexicon_flags: np.ndarray        # uint8, frozen term order
    dense: np.ndarray                # float64, embedding dims
    matches: list[MatchResult] = field(default_factory=list)
    known_tokens: int = 0

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([self.lexicon_flags.astype(np.float64), self.dense])

    def matched_terms(self) -> list[str]:
        return sorted({m.lexicon_term for m in self.matches})


@dataclass
class FeatureMatrix:
    terms: list[str]
    flags: np.ndarray                # n x |terms| uint8
    dense: np.ndarray                # n x dims float64
    lexicon_fingerprint: str
    labels: list[str] | None = None
    ids: list[str] | None = None
    row_matches: list[list[MatchResult]] | None = None

    @property
    def n(self) -> int:
        return int(self.flags.shape[0])

    @property
    def dims(self) -> int:
        return int(self.dense.shape[1])

    @property
    def X(self) -> np.ndarray:
        return np.hstack([self.flags.astype(np.float64), self.dense])


def _phrase_present(words: list[str], phrase: list[str]) -> bool:
    k = len(phrase)
    return any(words[i:i + k] == phrase for i in range(len(words) - k + 1))


def extract(post_text: str, lexicon: Lexicon, table: EmbeddingTable,
            config: NormalizerConfig | None = None,
            dense_source: "str | ExternalVectors" = "table",
            post_id: str | None = None) -> FeatureVector:
    """Featurize one post against a frozen lexicon.

    Flag i is 1 iff lexicon term i matched at least one token through the
    exact/deobfuscated/fuzzy cascade. Multi-word terms match as exact
    consecutive normalized-token sequences. Deterministic throughout.
    """
    config = config or NormalizerConfig()
    terms = lexicon.active_terms()
    tokens = tokenize(post_text)
    normalized = [t.normalized for t in tokens]

    single = [t for t in terms if " " not in t]
    flags = np.zeros(len(terms), dtype=np.uint8)
    term_pos = {t: i for i, t in enumerate(terms)}
    matches: list[MatchResult] = []
    for token in tokens:
        hit = match(token, single, config)
        if hit is not None:
            matches.append(hit)
            flags[term_pos[hit.lexicon_term]] = 1
    for t in terms:
        if " " in t and _phrase_present(normalized, t.split()):
            flags[term_pos[t]] = 1

    if isinstance(dense_source, ExternalVectors):
        dense = dense_source.get(post_id)
        known = len(normalized)
    else:
        if dense_source != "table":
            raise ValueError(f"unknown dense source {dense_source!r}")
        pooled = table.document_embedding(normalized)
        dense = pooled.vector
        known = pooled.known_tokens
    return FeatureVector(lexicon_flags=flags, dense=dense,
                         matches=matches, known_tokens=known)


def build_matrix(corpus: LabeledCorpus, lexicon: Lexicon, table: EmbeddingTable,
                 config: NormalizerConfig | None = None,
                 dense_source: "str | ExternalVectors" = "table") -> FeatureMatrix:
    """One feature row per post, in corpus order, labels aligned when present."""
    terms = lexicon.active_terms()
    rows_flags, rows_dense, row_matches = [], [], []
    labels: list[str] | None = [] if all(p.label is not None for p in corpus) and len(corpus) else None
    for post in corpus:
        try:
            fv = extract(post.text, lexicon, table, config, dense_source, post_id=post.id)
        except InputError as exc:
            raise InputError(f"post {post.id!r}: {exc}") from exc
        rows_flags.append(fv.lexicon_flags)
        rows_dense.append(fv.dense)
        row_matches.append(fv.matches)
        if labels is not None:
            labels.append(post.label)
    dims = rows_dense[0].size if rows_dense else (
        dense_source.dims if isinstance(dense_source, ExternalVectors) else table.dims)
    return FeatureMatrix(
        terms=terms,
        flags=np.array(rows_flags, dtype=np.uint8).reshape(len(rows_flags), len(terms)),
        dense=np.array(rows_dense, dtype=np.float64).reshape(len(rows_dense), dims),
        lexicon_fingerprint=lexicon_fingerprint(terms),
        labels=labels,
        ids=[p.id for p in corpus],
        row_matches=row_matches,
    )


def save_matrix(matrix: FeatureMatrix, path: str | Path) -> None:
    """Dense CSV: flag_<term> columns, d0..d{dims-1}, optional label."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"flag_{t}" for t in matrix.terms]
        header += [f"d{i}" for i in range(matrix.dims)]
        if matrix.labels is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(matrix.n):
            row = [str(int(v)) for v in matrix.flags[i]]
            row += [repr(float(v)) for v in matrix.dense[i]]
            if matrix.labels is not None:
                row.append(matrix.labels[i])
            writer.writerow(row)


def load_matrix(path: str | Path) -> FeatureMatrix:
    """Read the CSV export; the fingerprint is recomputed from the flag
    columns so the stale-lexicon guard works on round-tripped files."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read feature matrix {path}: {exc}") from exc
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{path}: empty feature file") from None
    terms = [h[len("flag_"):] for h in header if h.startswith("flag_")]
    dense_cols = [h for h in header if h.startswith("d") and h[1:].isdigit()]
    has_label = header[-1] == "label"
    nf, nd = len(terms), len(dense_cols)

    flags, dense, labels = [], [], []
    for i, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != nf + nd + (1 if has_label else 0):
            raise InputError(f"{path}:{i}: expected {nf + nd} feature columns")
        flags.append([int(v) for v in row[:nf]])
        dense.append([float(v) for v in row[nf:nf + nd]])
        if has_label:
            labels.append(row[-1])
    return FeatureMatrix(
        terms=terms,
        flags=np.array(flags, dtype=np.uint8).reshape(len(flags), nf),
        dense=np.array(dense, dtype=np.float64).reshape(len(dense), nd),
        lexicon_fingerprint=lexicon_fingerprint(terms),
        labels=labels if has_label else None,
    )
