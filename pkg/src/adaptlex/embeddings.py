"""Word-embedding tables: text-format loading, cosine similarity, exact
nearest-neighbor queries, and mean-pooled document vectors.

File format: UTF-8, one record per line, ``token c1 c2 ... cd`` separated by
whitespace. An optional first line ``COUNT DIMS`` (two integer fields) is
auto-detected as a header. Tokens may not contain whitespace and are
lowercased on load.

Vectors are stored in single precision; all similarity arithmetic happens in
double precision so comparisons stay stable at thresholds like 0.75.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class NeighborHit:
    token: str
    similarity: float


@dataclass
class LoadSummary:
    """Per-file bookkeeping from load_embeddings."""

    lines: int = 0
    loaded: int = 0
    duplicates: int = 0
    zero_vectors: int = 0


@dataclass
class PooledVector:
    """A document embedding plus coverage metadata."""

    vector: np.ndarray
    known_tokens: int
    unknown_tokens: int


class EmbeddingTable:
    """Immutable token -> vector map with cached norms.

    Safe to share across concurrent readers; nothing mutates after
    construction.
    """

    def __init__(self, tokens: list[str], vectors: np.ndarray, source: str = "",
                 summary: LoadSummary | None = None):
        if vectors.ndim != 2 or len(tokens) != vectors.shape[0]:
            raise ValueError("tokens and vector rows must align")
        self.tokens = list(tokens)
        self.dims = int(vectors.shape[1])
        self.source = source
        self.summary = summary or LoadSummary(loaded=len(tokens))
        self._vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        self._index = {t: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise ValueError("duplicate tokens in table")
        self._norms = np.linalg.norm(self._vectors.astype(np.float64), axis=1)
        if not np.all(np.isfinite(self._vectors)):
            raise ValueError("non-finite vector component in table")
        if np.any(self._norms == 0.0):
            raise ValueError("zero vector in table")

    @classmethod
    def from_entries(cls, entries: dict[str, "np.ndarray | list[float]"],
                     source: str = "") -> "EmbeddingTable":
        tokens = [t.lower() for t in entries]
        vectors = np.array([np.asarray(v, dtype=np.float64) for v in entries.values()],
                           dtype=np.float32)
        return cls(tokens, vectors, source=source)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def vector(self, token: str) -> np.ndarray:
        """Stored single-precision vector for a token (read-only view)."""
        try:
            row = self._index[token]
        except KeyError:
            raise KeyError(f"token not in embedding table: {token!r}") from None
        v = self._vectors[row]
        v.setflags(write=False)
        return v

    def norm(self, token: str) -> float:
        return float(self._norms[self._index[token]])

    def neighbors(self, query_token: str, k: int, min_similarity: float = -1.0
                  ) -> list[NeighborHit]:
        """Up to k most-similar tokens, query excluded.

        Sorted by similarity descending, ties broken lexicographically.
        Raises KeyError for unknown query tokens so seed attrition during
        expansion can never pass silently.
        """
        if k <= 0:
            raise ValueError("k must be positive")
        if query_token not in self._index:
            raise KeyError(f"token not in embedding table: {query_token!r}")
        row = self._index[query_token]
        sims = self.similarities_to(query_token)
        order = [i for i in range(len(self.tokens)) if i != row and sims[i] >= min_similarity]
        order.sort(key=lambda i: (-sims[i], self.tokens[i]))
        return [NeighborHit(self.tokens[i], float(sims[i])) for i in order[:k]]

    def similarities_to(self, query_token: str) -> np.ndarray:
        """Cosine similarity of every table row against one token (float64)."""
        row = self._index[query_token]
        q = self._vectors[row].astype(np.float64)
        dots = self._vectors.astype(np.float64) @ q
        return dots / (self._norms * self._norms[row])

    def document_embedding(self, tokens: list[str], policy: str = "mean") -> PooledVector:
        """Pool token vectors into one document vector.

        Only policy "mean" (unweighted mean over in-vocabulary tokens) is
        supported. Unknown tokens are skipped and counted; a document with no
        known token pools to the zero vector with known_tokens=0.
        """
        if policy != "mean":
            raise ValueError(f"unknown pooling policy: {policy!r}")
        rows = [self._index[t] for t in tokens if t in self._index]
        unknown = len(tokens) - len(rows)
        if not rows:
            return PooledVector(np.zeros(self.dims, dtype=np.float64), 0, unknown)
        mean = self._vectors[rows].astype(np.float64).mean(axis=0)
        return PooledVector(mean, len(rows), unknown)

    def save(self, path: str | Path, header: bool = True) -> None:
        """Write the documented text format; %.9g round-trips float32 exactly."""
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            if header:
                fh.write(f"{len(self.tokens)} {self.dims}\n")
            for tok, row in zip(self.tokens, self._vectors):
                comps = " ".join(f"{float(c):.9g}" for c in row)
                fh.write(f"{tok} {comps}\n")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (self.tokens == other.tokens and self.dims == other.dims
                and np.array_equal(self._vectors, other._vectors))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors, computed in double precision.

    Zero vectors are a domain error, never silently 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for the zero vector")
    return float(np.dot(a, b) / (na * nb))


def table_cosine(table: EmbeddingTable, a: str, b: str) -> float:
    """Cosine between two in-table tokens using the cached norms."""
    va = table.vector(a).astype(np.float64)
    vb = table.vector(b).astype(np.float64)
    return float(np.dot(va, vb) / (table.norm(a) * table.norm(b)))


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    return all(f.lstrip("+-").isdigit() for f in fields)


def load_embeddings(path: str | Path, expected_dims: int | None = None) -> EmbeddingTable:
    """Load a text-format vector file into an EmbeddingTable.

    Tokens are lowercased; on duplicates the first occurrence wins (common
    pretrained-vector convention: first entry is the dominant sense).
    Zero vectors are dropped. Both are counted in ``table.summary``.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read embeddings file {path}: {exc}") from exc

    summary = LoadSummary()
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    index: dict[str, int] = {}
    dims: int | None = expected_dims

    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if lineno == 1 and _is_header(fields):
            declared = int(fields[1])
            if dims is not None and declared != dims:
                raise InputError(
                    f"{path}:1: header declares dims={declared}, expected {dims}")
            dims = declared
            continue
        summary.lines += 1
        token = fields[0].lower()
        try:
            vec = np.array([float(f) for f in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: bad vector component ({exc})") from None
        if not np.all(np.isfinite(vec)):
            raise InputError(f"{path}:{lineno}: non-finite vector component")
        if dims is None:
            if vec.size == 0:
                raise InputError(f"{path}:{lineno}: token with no components")
            dims = int(vec.size)
        if vec.size != dims:
            raise InputError(
                f"{path}:{lineno}: expected {dims} components, found {vec.size}")
        if token in index:
            summary.duplicates += 1
            continue
        if not np.any(vec):
            summary.zero_vectors += 1
            continue
        index[token] = len(tokens)
        tokens.append(token)
        rows.append(vec.astype(np.float32))

    if not tokens:
        raise InputError(f"{path}: no usable vectors")
    summary.loaded = len(tokens)
    matrix = np.vstack(rows)
    return EmbeddingTable(tokens, matrix, source=path.name, summary=summary)
