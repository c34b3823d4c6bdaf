"""Hybrid feature vectors: flags, dense block, fingerprints, CSV round-trip."""

from __future__ import annotations

import json

import numpy as np
import pytest

from adaptlex.corpus import LabeledCorpus, Post
from adaptlex.embeddings import EmbeddingTable
from adaptlex.errors import InputError
from adaptlex.features import (ExternalVectors, build_matrix, extract,
                               lexicon_fingerprint, load_matrix, save_matrix)
from adaptlex.lexicon import ACCEPTED, SEED, Lexicon, LexiconEntry
from adaptlex.normalize import NormalizerConfig


def lexicon_of(*terms, accepted=()):
    lex = Lexicon()
    for t in terms:
        lex.add_entry(LexiconEntry(term=t, status=SEED, source="t"))
    for t in accepted:
        lex.add_entry(LexiconEntry(term=t, status=ACCEPTED, source="t", generation=1))
    return lex


@pytest.fixture
def small_table():
    return EmbeddingTable.from_entries({
        "i": [0.1, 0.2], "just": [0.3, 0.1], "like": [0.2, 0.4],
        "shit": [0.9, 0.1], "men": [0.5, 0.5],
    })


class TestExtract:
    def test_flag_positions_frozen_order(self, small_table):
        lex = lexicon_of("fuck", "nasty", "shit")
        fv = extract("I just like nas.ty shit men", lex, small_table)
        assert fv.lexicon_flags.tolist() == [0, 1, 1]
        assert set(fv.matched_terms()) == {"nasty", "shit"}

    def test_empty_post(self, small_table):
        lex = lexicon_of("fuck", "nasty", "shit")
        fv = extract("", lex, small_table)
        assert fv.lexicon_flags.tolist() == [0, 0, 0]
        assert np.all(fv.dense == 0.0)
        assert fv.known_tokens == 0

    def test_fuzzy_and_leet_with_len4_policy(self, small_table):
        lex = lexicon_of("fuck", "nasty", "shit")
        cfg = NormalizerConfig.create(fuzzy_rules=[(4, 1)])
        fv = extract("fckk sh1t", lex, small_table, config=cfg)
        assert fv.lexicon_flags.tolist() == [1, 0, 1]
        kinds = {m.lexicon_term: m.kind for m in fv.matches}
        assert kinds["fuck"] == "fuzzy"
        assert kinds["shit"] == "deobfuscated"

    def test_dense_is_mean_pooled(self, small_table):
        lex = lexicon_of("shit")
        fv = extract("i just", lex, small_table)
        assert np.allclose(fv.dense, [(0.1 + 0.3) / 2, (0.2 + 0.1) / 2], atol=1e-7)
        assert fv.known_tokens == 2

    def test_multiword_term_exact_sequence(self, small_table):
        lex = lexicon_of("son of a bitch", "shit")
        fv = extract("you son of a bitch !", lex, small_table)
        assert fv.lexicon_flags.tolist() == [1, 0]
        fv2 = extract("son of the bitch", lex, small_table)
        assert fv2.lexicon_flags.tolist() == [0, 0]

    def test_external_vector_by_post_id(self, small_table, tmp_path):
        path = tmp_path / "dense.jsonl"
        path.write_text('{"dims": 3}\n{"id": "p1", "vector": [1.0, 2.0, 3.0]}\n')
        ext = ExternalVectors.load(path)
        lex = lexicon_of("shit")
        fv = extract("whatever", lex, small_table, dense_source=ext, post_id="p1")
        assert fv.dense.tolist() == [1.0, 2.0, 3.0]

    def test_missing_external_vector_names_post(self, small_table, tmp_path):
        path = tmp_path / "dense.jsonl"
        path.write_text('{"dims": 2}\n{"id": "p1", "vector": [1.0, 2.0]}\n')
        ext = ExternalVectors.load(path)
        lex = lexicon_of("shit")
        with pytest.raises(InputError, match="p2"):
            extract("whatever", lex, small_table, dense_source=ext, post_id="p2")

    def test_external_dims_mismatch(self, tmp_path):
        path = tmp_path / "dense.jsonl"
        path.write_text('{"dims": 2}\n{"id": "p1", "vector": [1.0, 2.0, 3.0]}\n')
        with pytest.raises(InputError, match="dims"):
            ExternalVectors.load(path)


def corpus3() -> LabeledCorpus:
    return LabeledCorpus([
        Post(id="a", text="i just like shit", label="hate"),
        Post(id="b", text="i like men", label="normal"),
        Post(id="c", text="just men", label="normal"),
    ])


class TestBuildMatrix:
    def test_rows_in_corpus_order_and_determinism(self, small_table):
        lex = lexicon_of("shit")
        m1 = build_matrix(corpus3(), lex, small_table)
        m2 = build_matrix(corpus3(), lex, small_table)
        assert m1.n == 3
        assert m1.ids == ["a", "b", "c"]
        assert np.array_equal(m1.flags, m2.flags)
        assert np.array_equal(m1.dense, m2.dense)
        assert m1.lexicon_fingerprint == m2.lexicon_fingerprint

    def test_lexicon_growth_changes_fingerprint_and_length(self, small_table):
        base = lexicon_of("shit")
        grown = lexicon_of("shit", accepted=["men"])
        m1 = build_matrix(corpus3(), base, small_table)
        m2 = build_matrix(corpus3(), grown, small_table)
        assert m2.flags.shape[1] == m1.flags.shape[1] + 1
        assert m1.lexicon_fingerprint != m2.lexicon_fingerprint

    def test_error_names_failing_post(self, small_table, tmp_path):
        path = tmp_path / "dense.jsonl"
        path.write_text('{"dims": 2}\n{"id": "a", "vector": [1.0, 2.0]}\n')
        ext = ExternalVectors.load(path)
        lex = lexicon_of("shit")
        with pytest.raises(InputError, match="'b'"):
            build_matrix(corpus3(), lex, small_table, dense_source=ext)

    def test_labels_aligned(self, small_table):
        m = build_matrix(corpus3(), lexicon_of("shit"), small_table)
        assert m.labels == ["hate", "normal", "normal"]

    def test_flag_monotone_in_lexicon_growth(self, small_table):
        base = lexicon_of("shit")
        grown = lexicon_of("shit", accepted=["men"])
        mb = build_matrix(corpus3(), base, small_table)
        mg = build_matrix(corpus3(), grown, small_table)
        flagged_base = {(i, t) for i in range(mb.n)
                        for j, t in enumerate(mb.terms) if mb.flags[i, j]}
        flagged_grown = {(i, t) for i in range(mg.n)
                         for j, t in enumerate(mg.terms) if mg.flags[i, j]}
        assert flagged_base <= flagged_grown

    def test_flag_soundness_rechecks_matches(self, small_table):
        from adaptlex.normalize import match, tokenize
        lex = lexicon_of("shit", "nasty")
        corpus = LabeledCorpus([Post(id="x", text="nas.ty sh1t here")])
        m = build_matrix(corpus, lex, small_table)
        for j, term in enumerate(m.terms):
            if m.flags[0, j]:
                hits = [match(t, [term]) for t in tokenize("nas.ty sh1t here")]
                assert any(h is not None for h in hits)


class TestMatrixCsv:
    def test_round_trip(self, small_table, tmp_path):
        m = build_matrix(corpus3(), lexicon_of("shit", "nasty"), small_table)
        path = tmp_path / "features.csv"
        save_matrix(m, path)
        again = load_matrix(path)
        assert again.terms == m.terms
        assert np.array_equal(again.flags, m.flags)
        assert np.array_equal(again.dense, m.dense)
        assert again.labels == m.labels
        assert again.lexicon_fingerprint == m.lexicon_fingerprint

    def test_header_layout(self, small_table, tmp_path):
        m = build_matrix(corpus3(), lexicon_of("shit"), small_table)
        path = tmp_path / "features.csv"
        save_matrix(m, path)
        header = path.read_text().splitlines()[0].split(",")
        assert header == ["flag_shit", "d0", "d1", "label"]

    def test_fingerprint_depends_only_on_terms(self):
        assert lexicon_fingerprint(["a", "b"]) != lexicon_fingerprint(["b", "a"])
        assert lexicon_fingerprint(["a", "b"]) == lexicon_fingerprint(["a", "b"])
