"""Segment-level inverted index of precomputed query-document interactions."""

from .corpus import Document, Vocabulary, build_vocabulary, document_frequency, load_corpus, tokenize
from .embeddings import load_contextual, load_static, pseudo_provider
from .index import SegmentIndex, assemble_qd, build_index, load, lookup, save
from .interactions import FunctionParams, InteractionContext, InteractionSchema
from .retrieval import OnTheFly, ScoredDoc, rank_topk, score_onthefly, search
from .segmenter import SegmenterConfig, segment_document, standardize, texttile
from .trec import evaluate, read_qrels, read_run, write_run

__version__ = "0.1.0"

__all__ = [
    "Document", "Vocabulary", "build_vocabulary", "document_frequency", "load_corpus", "tokenize",
    "load_contextual", "load_static", "pseudo_provider",
    "SegmentIndex", "assemble_qd", "build_index", "load", "lookup", "save",
    "FunctionParams", "InteractionContext", "InteractionSchema",
    "OnTheFly", "ScoredDoc", "rank_topk", "score_onthefly", "search",
    "SegmenterConfig", "segment_document", "standardize", "texttile",
    "evaluate", "read_qrels", "read_run", "write_run",
]
