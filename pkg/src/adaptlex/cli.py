"""Command-line pipeline driver: sanitize -> expand -> review -> featurize ->
train -> evaluate -> score -> compare.

Every subcommand reads and writes only documented artifacts under the
configured artifacts directory, so two runs from identical inputs and seeds
produce byte-identical candidate files, models, and reports.

Exit codes: 0 ok, 2 config error, 3 input error, 4 stage-order error.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from . import classifiers, corpus as corpus_io, features as features_mod
from . import lexicon as lexicon_mod, metrics, wordgraph
from .config import PipelineConfig, load_config
from .embeddings import EmbeddingTable, load_embeddings
from .errors import ConfigError, InputError, StageOrderError

EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_STAGE = 4


def _fail(code: int, kind: str, message: str):
    click.echo(json.dumps({"error": {"kind": kind, "message": message}}),
               err=True)
    sys.exit(code)


def _load_cfg(ctx) -> PipelineConfig:
    cfg_path = ctx.obj.get("config_path")
    if not cfg_path:
        _fail(EXIT_CONFIG, "config", "--config is required")
    return load_config(cfg_path)


def _require_artifact(path: Path, producer: str) -> Path:
    if not path.exists():
        raise StageOrderError(f"missing artifact {path}; run `{producer}` first")
    return path


def _load_table(cfg: PipelineConfig) -> EmbeddingTable:
    if cfg.paths.embeddings is None:
        raise ConfigError("paths.embeddings is not configured")
    return load_embeddings(cfg.resolve(cfg.paths.embeddings))


def _load_corpus(cfg: PipelineConfig) -> corpus_io.LabeledCorpus:
    if cfg.paths.corpus is None:
        raise ConfigError("paths.corpus is not configured")
    cf = cfg.corpus_format
    schema = corpus_io.CorpusSchema(id_field=cf.id_field, text_field=cf.text_field,
                                    label_field=cf.label_field)
    return corpus_io.load_corpus(cfg.resolve(cfg.paths.corpus), format=cf.format,
                                 schema=schema, mapping=cf.label_mapping,
                                 anonymize=cf.anonymize)


def _dense_source(cfg: PipelineConfig):
    if cfg.paths.external_dense is not None:
        return features_mod.ExternalVectors.load(cfg.resolve(cfg.paths.external_dense))
    return "table"


def _entry_doc(e: lexicon_mod.LexiconEntry) -> dict:
    doc = {"term": e.term, "status": e.status, "source": e.source,
           "generation": e.generation}
    if e.evidence:
        doc["evidence"] = {"seed": e.evidence.seed, "similarity": e.evidence.similarity}
    return doc


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Pipeline JSON config")
@click.pass_context
def cli(ctx, config_path):
    """Adaptive toxic-language pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@cli.command()
@click.pass_context
def sanitize(ctx):
    """Build the seed lexicon from the configured raw lists."""
    cfg = _load_cfg(ctx)
    if not cfg.paths.raw_lexicons:
        raise ConfigError("paths.raw_lexicons is empty")
    raw_lists = []
    for p in cfg.paths.raw_lexicons:
        path = cfg.resolve(p)
        terms = [ln.split("#", 1)[0].strip() for ln in
                 path.read_text(encoding="utf-8").splitlines()]
        raw_lists.append((path.stem, [t for t in terms if t]))
    lex, report = lexicon_mod.sanitize(
        raw_lists,
        stopword_file=cfg.resolve(cfg.paths.stopwords),
        contextual_blocklist_file=cfg.resolve(cfg.paths.blocklist),
        wordlist_file=cfg.resolve(cfg.paths.wordlist),
    )
    lexicon_mod.save_lexicon(lex, cfg.resolve(cfg.paths.lexicon))
    _write_json(cfg.artifact("sanitize_report.json"), dataclasses.asdict(report))
    click.echo(f"seed lexicon: {len(lex)} terms "
               f"(removed: {report.non_english} non-english, {report.duplicates} "
               f"duplicate, {report.stopwords} stopword, {report.blocklisted} blocklisted)")


@cli.command()
@click.option("--threshold", type=float, default=None, help="Override expansion threshold")
@click.option("--generations", type=int, default=None, help="Expansion rounds to run")
@click.pass_context
def expand(ctx, threshold, generations):
    """Propose candidate terms from embedding similarity."""
    cfg = _load_cfg(ctx)
    lex_path = _require_artifact(cfg.resolve(cfg.paths.lexicon), "sanitize")
    lex = lexicon_mod.load_lexicon(lex_path)
    table = _load_table(cfg)
    thr = threshold if threshold is not None else cfg.expansion.threshold
    rounds = generations if generations is not None else cfg.expansion.generations
    for _ in range(rounds):
        candidates, report = lexicon_mod.expand(
            lex, table, threshold=thr,
            max_candidates_per_seed=cfg.expansion.max_candidates_per_seed)
        gen = report.generation
        _write_json(cfg.artifact(f"candidates_gen{gen}.json"),
                    {"generation": gen, "threshold": thr,
                     "candidates": [_entry_doc(c) for c in candidates]})
        _write_json(cfg.artifact(f"expansion_report_gen{gen}.json"),
                    dataclasses.asdict(report))
        lex.add_candidates(candidates, threshold=thr)
        click.echo(f"generation {gen}: {len(candidates)} candidates "
                   f"({len(report.sources_missing)} sources missing from table)")
        if not candidates:
            break
    lexicon_mod.save_lexicon(lex, lex_path)


@cli.command()
@click.option("--vocab-size", type=int, default=None,
              help="Top-N most frequent corpus tokens to graph")
@click.pass_context
def graph(ctx, vocab_size):
    """Build the similarity graph, run Louvain, flag toxic communities."""
    cfg = _load_cfg(ctx)
    lex = lexicon_mod.load_lexicon(
        _require_artifact(cfg.resolve(cfg.paths.lexicon), "sanitize"))
    table = _load_table(cfg)
    corpus = _load_corpus(cfg)
    from .normalize import tokenize
    freq: dict[str, int] = {}
    for post in corpus:
        for tok in tokenize(post.text):
            if tok.normalized in table:
                freq[tok.normalized] = freq.get(tok.normalized, 0) + 1
    top_n = vocab_size if vocab_size is not None else cfg.graph.vocab_size
    vocab = sorted(sorted(freq), key=lambda t: -freq[t])[:top_n]
    if not vocab:
        raise InputError("no corpus token appears in the embedding table")
    g = wordgraph.build_graph(table, vocab, threshold=cfg.graph.threshold)
    part = wordgraph.louvain(g, seed=cfg.graph.seed, resolution=cfg.graph.resolution)
    flagged = wordgraph.flag_communities(g, part, lex)
    g.save_edges(cfg.artifact("graph_edges.tsv"))
    wordgraph.save_partition(part, cfg.artifact("graph_partition.json"))
    _write_json(cfg.artifact("flagged_communities.json"), [
        {"community_id": f.community_id, "toxic_count": f.toxic_count,
         "members": f.members, "candidates": [_entry_doc(c) for c in f.candidates]}
        for f in flagged
    ])
    click.echo(f"graph: {len(g.nodes)} nodes, {len(g.edges)} edges, "
               f"{len(set(part.assignment.values()))} communities "
               f"(modularity {part.modularity:.4f}), {len(flagged)} flagged")


@cli.command()
@click.pass_context
def featurize(ctx):
    """Build the hybrid feature matrix for the configured corpus."""
    cfg = _load_cfg(ctx)
    lex = lexicon_mod.load_lexicon(
        _require_artifact(cfg.resolve(cfg.paths.lexicon), "sanitize"))
    table = _load_table(cfg)
    corpus = _load_corpus(cfg)
    matrix = features_mod.build_matrix(corpus, lex, table, cfg.normalizer,
                                       _dense_source(cfg))
    features_mod.save_matrix(matrix, cfg.artifact("features.csv"))
    click.echo(f"features: {matrix.n} rows x ({len(matrix.terms)} flags + "
               f"{matrix.dims} dense), fingerprint {matrix.lexicon_fingerprint}")


def _current_fingerprint(cfg: PipelineConfig) -> str:
    lex = lexicon_mod.load_lexicon(
        _require_artifact(cfg.resolve(cfg.paths.lexicon), "sanitize"))
    return features_mod.lexicon_fingerprint(lex.active_terms())


def _load_features(cfg: PipelineConfig) -> features_mod.FeatureMatrix:
    path = _require_artifact(cfg.artifact("features.csv"), "featurize")
    matrix = features_mod.load_matrix(path)
    current = _current_fingerprint(cfg)
    if matrix.lexicon_fingerprint != current:
        raise StageOrderError(
            f"features.csv fingerprint {matrix.lexicon_fingerprint} does not match "
            f"current lexicon {current}; re-run featurize")
    return matrix


@cli.command()
@click.pass_context
def train(ctx):
    """Train the configured classifier on the feature matrix."""
    cfg = _load_cfg(ctx)
    matrix = _load_features(cfg)
    hp = classifiers.Hyperparams(epochs=cfg.training.epochs, seed=cfg.training.seed,
                                 batch_size=cfg.training.batch_size)
    model = classifiers.train(matrix, cfg.training.kind, hp)
    classifiers.save_model(model, cfg.artifact("model.json"))
    click.echo(f"trained {model.kind}: final loss "
               f"{model.training_report.final_loss:.6f}")


@cli.command("cross-validate")
@click.pass_context
def cross_validate(ctx):
    """Grid search with stratified k-fold CV; stores the per-point reports."""
    cfg = _load_cfg(ctx)
    matrix = _load_features(cfg)
    best, results = classifiers.grid_search(matrix, cfg.training.kind,
                                            cfg.training.grid,
                                            k=cfg.training.k, seed=cfg.training.seed)
    _write_json(cfg.artifact("cv_report.json"), {
        "best": dataclasses.asdict(best),
        "points": [
            {"hyperparams": dataclasses.asdict(r.hyperparams),
             **({"report": r.report.to_dict()} if r.report else {"error": r.error})}
            for r in results
        ],
    })
    model = classifiers.train(matrix, cfg.training.kind, best)
    classifiers.save_model(model, cfg.artifact("model.json"))
    click.echo(f"best {cfg.training.kind}: l2={best.l2_lambda} lr={best.learning_rate}")


@cli.command()
@click.pass_context
def evaluate(ctx):
    """Evaluate the trained model on the labeled feature matrix."""
    cfg = _load_cfg(ctx)
    matrix = _load_features(cfg)
    model = classifiers.load_model(_require_artifact(cfg.artifact("model.json"), "train"))
    if matrix.labels is None:
        raise InputError("feature matrix has no labels to evaluate against")
    preds = classifiers.predict(model, matrix)
    report = metrics.evaluate(preds, matrix.labels)
    report.save(cfg.artifact("eval_report.json"))
    text = report.format_table(title=f"{model.kind} on {matrix.n} posts")
    cfg.artifact("eval_report.txt").write_text(text + "\n", encoding="utf-8")
    click.echo(text)


@cli.command()
@click.option("--out", type=click.Path(), default=None, help="Output JSONL path")
@click.pass_context
def score(ctx, out):
    """Score the configured corpus; emits JSONL {id, label, score, matched_terms}."""
    cfg = _load_cfg(ctx)
    lex = lexicon_mod.load_lexicon(
        _require_artifact(cfg.resolve(cfg.paths.lexicon), "sanitize"))
    model = classifiers.load_model(_require_artifact(cfg.artifact("model.json"), "train"))
    current = features_mod.lexicon_fingerprint(lex.active_terms())
    if model.lexicon_fingerprint != current:
        raise StageOrderError(
            f"model fingerprint {model.lexicon_fingerprint} does not match current "
            f"lexicon {current}; re-run featurize and train")
    table = _load_table(cfg)
    corpus = _load_corpus(cfg)
    matrix = features_mod.build_matrix(corpus, lex, table, cfg.normalizer,
                                       _dense_source(cfg))
    scores = classifiers.predict_score(model, matrix)
    labels = classifiers.predict(model, matrix)
    out_path = Path(out) if out else cfg.artifact("scores.jsonl")
    with out_path.open("w", encoding="utf-8") as fh:
        for i, post in enumerate(corpus):
            matched = sorted({m.lexicon_term for m in matrix.row_matches[i]})
            fh.write(json.dumps({"id": post.id, "label": labels[i],
                                 "score": float(scores[i]),
                                 "matched_terms": matched}) + "\n")
    click.echo(f"scored {len(corpus)} posts -> {out_path} "
               f"({labels.count('hate')} flagged hate)")


@cli.command()
@click.option("--a", "path_a", type=click.Path(exists=False), required=True,
              help="Our labeling JSONL ({id, label})")
@click.option("--b", "path_b", type=click.Path(exists=False), required=True,
              help="External labeling JSONL ({id, label})")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def compare(ctx, path_a, path_b, out):
    """Disagreement report between two labelings of the configured corpus."""
    cfg = _load_cfg(ctx)
    corpus = _load_corpus(cfg)

    def read_labels(p: str) -> dict[str, str]:
        path = Path(p)
        if not path.exists():
            raise InputError(f"labeling file not found: {p}")
        out: dict[str, str] = {}
        for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            row = json.loads(line)
            out[str(row["id"])] = row["label"]
        return out

    report = metrics.compare_labelings(read_labels(path_a), read_labels(path_b),
                                       corpus, max_samples=cfg.service.example_cap * 10)
    out_path = Path(out) if out else cfg.artifact("disagreement.json")
    _write_json(out_path, report.to_dict())
    d = report.to_dict()["counts"]
    click.echo(f"a flags {d['a_total']}, b flags {d['b_total']}; "
               f"only_a {d['only_a']}, only_b {d['only_b']}, both {d['both']}, "
               f"neither {d['neither']}")


@cli.command()
@click.pass_context
def report(ctx):
    """Lexicon size bookkeeping per generation plus latest evaluation."""
    cfg = _load_cfg(ctx)
    lex = lexicon_mod.load_lexicon(
        _require_artifact(cfg.resolve(cfg.paths.lexicon), "sanitize"))
    counts = lex.counts()
    doc = {"counts": counts, "generations": lex.generation_summary()}
    eval_path = cfg.artifact("eval_report.json")
    if eval_path.exists():
        doc["evaluation"] = json.loads(eval_path.read_text(encoding="utf-8"))
    _write_json(cfg.artifact("summary.json"), doc)
    lines = [f"S (seed) size: {counts['seed']}",
             f"U (updated = seed + accepted) size: {counts['updated']}",
             f"pending candidates: {counts['candidate']}, rejected: {counts['rejected']}"]
    for g in doc["generations"]:
        thr = f" @ threshold {g['threshold']}" if g["threshold"] is not None else ""
        lines.append(f"  generation {g['generation']}{thr}: seed {g['seed']}, "
                     f"candidate {g['candidate']}, accepted {g['accepted']}, "
                     f"rejected {g['rejected']}")
    click.echo("\n".join(lines))


@cli.command("review-serve")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_context
def review_serve(ctx, host, port):
    """Serve the candidate-review HTTP API."""
    cfg = _load_cfg(ctx)
    import uvicorn
    from .server import create_app
    app = create_app(cfg)
    uvicorn.run(app, host=host or cfg.service.host, port=port or cfg.service.port)


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        _fail(EXIT_CONFIG, "usage", exc.format_message())
    except ConfigError as exc:
        _fail(EXIT_CONFIG, "config", str(exc))
    except StageOrderError as exc:
        _fail(EXIT_STAGE, "stage-order", str(exc))
    except InputError as exc:
        _fail(EXIT_INPUT, "input", str(exc))
    except (KeyError, ValueError) as exc:
        _fail(EXIT_INPUT, "input", str(exc))


if __name__ == "__main__":
    main()
