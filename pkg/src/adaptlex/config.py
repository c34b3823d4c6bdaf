"""Pipeline configuration: one JSON file, CLI flags override.

Collects every tunable the pipeline stages share (paths, expansion
threshold, normalizer policy, training grid, review-service settings) so
thresholds live in exactly one place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .classifiers import DEFAULT_GRID, Hyperparams
from .errors import ConfigError
from .normalize import NormalizerConfig


@dataclass
class PathsConfig:
    embeddings: str | None = None
    lexicon: str = "artifacts/lexicon.json"
    raw_lexicons: list[str] = field(default_factory=list)
    stopwords: str | None = None
    blocklist: str | None = None
    wordlist: str | None = None
    corpus: str | None = None
    external_dense: str | None = None
    artifacts_dir: str = "artifacts"
    decision_log: str = "artifacts/decisions.jsonl"


@dataclass
class CorpusFormat:
    format: str = "jsonl"
    id_field: str = "id"
    text_field: str = "text"
    label_field: str | None = "label"
    label_mapping: dict[str, str] | None = None
    anonymize: bool = False


@dataclass
class ExpansionConfig:
    threshold: float = 0.75
    max_candidates_per_seed: int = 25
    generations: int = 1


@dataclass
class GraphConfig:
    threshold: float = 0.75
    vocab_size: int = 5000
    resolution: float = 1.0
    seed: int = 0


@dataclass
class TrainingConfig:
    kind: str = "logistic"
    k: int = 10
    seed: int = 0
    epochs: int = 50
    batch_size: int = 32
    grid: list[Hyperparams] = field(default_factory=lambda: list(DEFAULT_GRID))


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8754
    example_cap: int = 5
    page_size: int = 20
    ui_dir: str | None = None


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    corpus_format: CorpusFormat = field(default_factory=CorpusFormat)
    expansion: ExpansionConfig = field(default_factory=ExpansionConfig)
    graph: GraphConfig = field(default_factory=GraphConfig)
    normalizer: NormalizerConfig = field(default_factory=NormalizerConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    base_dir: Path = field(default_factory=Path)

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    def artifact(self, name: str) -> Path:
        d = self.resolve(self.paths.artifacts_dir)
        d.mkdir(parents=True, exist_ok=True)
        return d / name

    def validate(self) -> None:
        if not (0.0 < self.expansion.threshold <= 1.0):
            raise ConfigError(f"expansion.threshold must be in (0, 1], "
                              f"got {self.expansion.threshold}")
        if not (0.0 < self.graph.threshold <= 1.0):
            raise ConfigError(f"graph.threshold must be in (0, 1], "
                              f"got {self.graph.threshold}")
        if self.training.k < 2:
            raise ConfigError(f"training.k must be >= 2, got {self.training.k}")
        if self.expansion.max_candidates_per_seed < 1:
            raise ConfigError("expansion.max_candidates_per_seed must be positive")
        for name in ("embeddings", "stopwords", "blocklist", "wordlist",
                     "corpus", "external_dense"):
            raw = getattr(self.paths, name)
            if raw is not None and not self.resolve(raw).exists():
                raise ConfigError(f"paths.{name} does not exist: {raw}")
        for raw in self.paths.raw_lexicons:
            if not self.resolve(raw).exists():
                raise ConfigError(f"paths.raw_lexicons entry does not exist: {raw}")


def _build(dc_type, raw: dict, where: str):
    fields = {f.name for f in dc_type.__dataclass_fields__.values()}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return dc_type(**raw)


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc

    cfg = PipelineConfig(base_dir=path.parent.resolve())
    known = {"paths", "corpus_format", "expansion", "graph", "normalizer",
             "training", "service"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config sections {sorted(unknown)}")
    try:
        if "paths" in doc:
            cfg.paths = _build(PathsConfig, doc["paths"], "paths")
        if "corpus_format" in doc:
            cfg.corpus_format = _build(CorpusFormat, doc["corpus_format"], "corpus_format")
        if "expansion" in doc:
            cfg.expansion = _build(ExpansionConfig, doc["expansion"], "expansion")
        if "graph" in doc:
            cfg.graph = _build(GraphConfig, doc["graph"], "graph")
        if "normalizer" in doc:
            norm = doc["normalizer"]
            cfg.normalizer = NormalizerConfig.create(
                substitutions=norm.get("substitutions"),
                fuzzy_rules=[tuple(r) for r in norm["fuzzy_policy"]]
                if "fuzzy_policy" in norm else None,
            )
        if "training" in doc:
            t = dict(doc["training"])
            grid_raw = t.pop("grid", None)
            cfg.training = _build(TrainingConfig, t, "training")
            if grid_raw is not None:
                cfg.training.grid = [
                    Hyperparams(epochs=cfg.training.epochs,
                                seed=cfg.training.seed,
                                batch_size=cfg.training.batch_size,
                                **point)
                    for point in grid_raw
                ]
        if "service" in doc:
            cfg.service = _build(ServiceConfig, doc["service"], "service")
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    cfg.validate()
    return cfg
