"""Post corpus ingestion from CSV / JSON-lines with label collapsing.

Raw dataset taxonomies collapse onto the binary {hate, normal} space via a
total LabelMapping; any raw label the mapping does not cover aborts the load
rather than silently dropping rows. "drop" removes a row on purpose (e.g.
spam). Handles can be anonymized to a fixed placeholder at load time.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

ANON_PLACEHOLDER = "@ANON"
_HANDLE = re.compile(r"@\w+")

HATE = "hate"
NORMAL = "normal"
DROP = "drop"


@dataclass
class Post:
    id: str
    text: str
    label: str | None = None
    source: str = ""


@dataclass
class CorpusSchema:
    id_field: str = "id"
    text_field: str = "text"
    label_field: str | None = "label"


class LabeledCorpus:
    def __init__(self, posts: list[Post], source: str = "",
                 label_counts: dict[str, int] | None = None):
        self.posts = posts
        self.source = source
        self.label_counts = label_counts or {}
        self.by_id = {p.id: p for p in posts}
        if len(self.by_id) != len(posts):
            raise InputError("duplicate post ids in corpus")

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)

    def labels(self) -> list[str]:
        missing = [p.id for p in self.posts if p.label is None]
        if missing:
            raise InputError(f"unlabeled posts: {missing[:5]}")
        return [p.label for p in self.posts]


def _map_label(raw: str, mapping: dict[str, str], where: str) -> str | None:
    if raw not in mapping:
        raise InputError(f"{where}: unmapped label {raw!r}")
    mapped = mapping[raw]
    if mapped not in (HATE, NORMAL, DROP):
        raise InputError(f"label mapping sends {raw!r} to unknown class {mapped!r}")
    return None if mapped == DROP else mapped


def anonymize_text(text: str) -> str:
    return _HANDLE.sub(ANON_PLACEHOLDER, text)


def load_corpus(path: str | Path, format: str = "jsonl",
                schema: CorpusSchema | None = None,
                mapping: dict[str, str] | None = None,
                anonymize: bool = False, source: str | None = None) -> LabeledCorpus:
    """Load posts from CSV or JSONL, collapsing labels through the mapping.

    A label field is read only when the schema declares one; a declared
    field with a mapping makes the mapping total over observed raw labels.
    """
    path = Path(path)
    schema = schema or CorpusSchema()
    if source is None:
        source = path.stem
    if format not in ("csv", "jsonl"):
        raise InputError(f"unknown corpus format {format!r}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read corpus {path}: {exc}") from exc

    rows: list[tuple[int, dict]] = []
    if format == "csv":
        reader = csv.DictReader(text.splitlines())
        for i, row in enumerate(reader, start=2):  # header is line 1
            rows.append((i, row))
    else:
        for i, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rows.append((i, json.loads(line)))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}:{i}: invalid JSON ({exc.msg})") from exc

    posts: list[Post] = []
    seen: set[str] = set()
    label_counts: dict[str, int] = {}
    for lineno, row in rows:
        if schema.id_field not in row or schema.text_field not in row:
            raise InputError(f"{path}:{lineno}: missing field "
                             f"{schema.id_field!r} or {schema.text_field!r}")
        pid = str(row[schema.id_field])
        body = str(row[schema.text_field] or "")
        if not body.strip():
            raise InputError(f"{path}:{lineno}: empty post text")
        if pid in seen:
            raise InputError(f"{path}:{lineno}: duplicate post id {pid!r}")
        seen.add(pid)

        label: str | None = None
        if schema.label_field is not None and schema.label_field in row \
                and row[schema.label_field] not in (None, ""):
            raw = str(row[schema.label_field])
            label_counts[raw] = label_counts.get(raw, 0) + 1
            if mapping is not None:
                label = _map_label(raw, mapping, f"{path}:{lineno}")
                if label is None:
                    continue
            else:
                if raw not in (HATE, NORMAL):
                    raise InputError(f"{path}:{lineno}: unmapped label {raw!r} "
                                     "(no mapping provided)")
                label = raw
        if anonymize:
            body = anonymize_text(body)
        posts.append(Post(id=pid, text=body, label=label, source=source))
    return LabeledCorpus(posts, source=source, label_counts=label_counts)


def save_corpus(corpus: LabeledCorpus, path: str | Path) -> None:
    """Canonical JSONL export: {id, text, label?, source} per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in corpus:
            doc: dict = {"id": p.id, "text": p.text}
            if p.label is not None:
                doc["label"] = p.label
            doc["source"] = p.source
            fh.write(json.dumps(doc, ensure_ascii=False) + "\n")


def split(corpus: LabeledCorpus, ratio: float, seed: int = 0,
          stratified: bool = False) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Disjoint, covering train/test split; deterministic per seed.

    Stratified keeps per-class train counts within 1 of n_c * ratio by
    distributing the rounding remainder to the classes with the largest
    fractional share.
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    n = len(corpus)
    n_train = round(n * ratio)

    if not stratified:
        order = rng.permutation(n)
        train_idx = set(order[:n_train].tolist())
    else:
        by_class: dict[str, list[int]] = {}
        for i, post in enumerate(corpus.posts):
            if post.label is None:
                raise InputError(f"stratified split needs labels; post {post.id} has none")
            by_class.setdefault(post.label, []).append(i)
        for cls, idx in by_class.items():
            if len(idx) < 2:
                raise ValueError(f"class {cls!r} has fewer than 2 members")
        floors = {c: int(len(idx) * ratio) for c, idx in by_class.items()}
        remainder = n_train - sum(floors.values())
        fracs = sorted(by_class, key=lambda c: (-(len(by_class[c]) * ratio % 1.0), c))
        for c in fracs[:remainder]:
            floors[c] += 1
        train_idx = set()
        for c in sorted(by_class):
            idx = np.array(by_class[c])
            order = rng.permutation(len(idx))
            train_idx.update(idx[order[:floors[c]]].tolist())

    train = [p for i, p in enumerate(corpus.posts) if i in train_idx]
    test = [p for i, p in enumerate(corpus.posts) if i not in train_idx]
    return (LabeledCorpus(train, source=corpus.source),
            LabeledCorpus(test, source=corpus.source))
