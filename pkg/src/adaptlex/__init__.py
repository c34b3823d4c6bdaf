"""Adaptive toxic-language engine.

Expands a seed hate-speech lexicon through word-embedding similarity,
matches obfuscated toxic terms, builds hybrid lexicon-flag + dense-embedding
features for linear classifiers, and hosts a human review loop for candidate
terms.
"""

from .embeddings import EmbeddingTable, NeighborHit, cosine, load_embeddings
from .lexicon import (Decision, Evidence, Lexicon, LexiconEntry, apply_decisions,
                      expand, load_lexicon, sanitize, save_lexicon)
from .normalize import (FuzzyPolicy, MatchResult, NormalizerConfig, Token,
                        damerau_levenshtein, match, tokenize, variants)
from .features import FeatureMatrix, FeatureVector, build_matrix, extract
from .classifiers import (CVReport, Hyperparams, LinearModel, cross_validate,
                          grid_search, predict, predict_score, stratified_folds,
                          train)
from .metrics import DisagreementReport, EvaluationReport, compare_labelings, evaluate
from .corpus import CorpusSchema, LabeledCorpus, Post, load_corpus, save_corpus, split
from .wordgraph import Partition, WordGraph, build_graph, flag_communities, louvain

__version__ = "0.1.0"
