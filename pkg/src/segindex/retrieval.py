"""Scoring q-d interaction matrices and ranking candidates.

Scorers accept a single :class:`QDMatrix` or a :class:`QDMatrices` batch and
read only the stored interaction columns they need. The on-the-fly path
recomputes the same matrices from raw document text and is the baseline
against which index lookups are checked and timed.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import Document, Tokenizer, Vocabulary, tokenize
from .index import QDMatrices, QDMatrix, SegmentIndex, assemble_qd
from .interactions import InteractionContext, SchemaError
from .segmenter import SegmenterConfig, segment_document

EPS = 1e-10


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float


@dataclass(frozen=True)
class KernelPoolConfig:
    """RBF kernels over stored cosine values with fixed combination weights."""

    mus: tuple[float, ...] = (-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0)
    sigmas: tuple[float, ...] = (0.1,) * 10 + (0.001,)
    weights: tuple[float, ...] = (1.0,) * 11

    def __post_init__(self):
        if not self.mus:
            raise ValueError("kernel pooling needs at least one kernel")
        if not len(self.mus) == len(self.sigmas) == len(self.weights):
            raise ValueError("kernel mus, sigmas and weights must have equal length")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("kernel widths must be > 0")


@dataclass(frozen=True)
class ScoringSettings:
    k1: float = 1.2
    b: float = 0.75
    kernels: KernelPoolConfig = field(default_factory=KernelPoolConfig)


def _column(qd: QDMatrix | QDMatrices, name: str) -> np.ndarray:
    try:
        col = qd.schema.index(name)
    except SchemaError:
        raise SchemaError(f"scorer needs interaction function {name}, missing from schema") from None
    return qd.values[..., col].astype(np.float64)


def _doc_lens(qd: QDMatrix | QDMatrices) -> np.ndarray:
    return np.asarray(qd.doc_lens if isinstance(qd, QDMatrices) else qd.doc_len, dtype=np.float64)


def _result(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def score_dot(qd: QDMatrix | QDMatrices):
    """Sum of stored DOT values over query rows and segments."""
    return _result(_column(qd, "DOT").sum(axis=(-2, -1)))


def _bm25(tf: np.ndarray, idf: np.ndarray, doc_len, avgdl: float, k1: float, b: float):
    K = k1 * ((1.0 - b) + b * np.asarray(doc_len, dtype=np.float64) / avgdl)
    K = np.asarray(K)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        contrib = idf * tf * (k1 + 1.0) / (tf + K)
    return np.where(tf > 0, contrib, 0.0).sum(axis=-1)


def _idfs(qd: QDMatrix | QDMatrices, vocab: Vocabulary) -> np.ndarray:
    return np.array([vocab.idf_of(t) for t in qd.query_terms], dtype=np.float64)


def score_bm25(qd: QDMatrix | QDMatrices, vocab: Vocabulary, doc_len=None, avgdl: float | None = None,
               k1: float = 1.2, b: float = 0.75):
    """Okapi BM25 with tf summed from the per-segment TF column."""
    tf = _column(qd, "TF").sum(axis=-1)
    dl = _doc_lens(qd) if doc_len is None else doc_len
    return _result(_bm25(tf, _idfs(qd, vocab), dl, vocab.avg_doc_len if avgdl is None else avgdl, k1, b))


def score_bm25_deepct(qd: QDMatrix | QDMatrices, vocab: Vocabulary, doc_len=None,
                      avgdl: float | None = None, k1: float = 1.2, b: float = 0.75):
    """BM25 with tf replaced by the clamped sum of contextual LINAGG weights."""
    tf = np.maximum(_column(qd, "LINAGG").sum(axis=-1), 0.0)
    dl = _doc_lens(qd) if doc_len is None else doc_len
    return _result(_bm25(tf, _idfs(qd, vocab), dl, vocab.avg_doc_len if avgdl is None else avgdl, k1, b))


def score_kernel_pool(qd: QDMatrix | QDMatrices, config: KernelPoolConfig = KernelPoolConfig()):
    cos = _column(qd, "COS")[..., None]  # (..., t, n_b, 1)
    mus = np.asarray(config.mus)
    sig = np.asarray(config.sigmas)
    phi = np.exp(-((cos - mus) ** 2) / (2.0 * sig**2)).sum(axis=-2)  # (..., t, K)
    feats = np.log(np.maximum(phi, EPS)) @ np.asarray(config.weights)
    return _result(feats.sum(axis=-1))


SCORERS: dict[str, tuple[str, Callable]] = {
    "dot": ("DOT", lambda qd, vocab, s: score_dot(qd)),
    "bm25": ("TF", lambda qd, vocab, s: score_bm25(qd, vocab, k1=s.k1, b=s.b)),
    "bm25_deepct": ("LINAGG", lambda qd, vocab, s: score_bm25_deepct(qd, vocab, k1=s.k1, b=s.b)),
    "kernel_pool": ("COS", lambda qd, vocab, s: score_kernel_pool(qd, s.kernels)),
}


def check_scorer(name: str, schema) -> None:
    if name not in SCORERS:
        raise SchemaError(f"unknown scorer {name!r}; choose from {', '.join(SCORERS)}")
    needed = SCORERS[name][0]
    if needed not in schema:
        raise SchemaError(f"scorer {name} needs interaction function {needed}, missing from schema")


def score(name: str, qd: QDMatrix | QDMatrices, vocab: Vocabulary,
          settings: ScoringSettings = ScoringSettings()):
    check_scorer(name, qd.schema)
    if len(qd.query_terms) == 0:
        return 0.0 if isinstance(qd, QDMatrix) else np.zeros(len(qd))
    return SCORERS[name][1](qd, vocab, settings)


def rank_topk(scored: Iterable[ScoredDoc], k: int) -> list[ScoredDoc]:
    """Top ``k`` by descending score; ties go to the smaller doc_id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return heapq.nsmallest(k, scored, key=lambda s: (-s.score, s.doc_id))


def search(index: SegmentIndex, query: Sequence[str], scorer: str = "bm25", k: int = 10,
           settings: ScoringSettings = ScoringSettings()) -> list[ScoredDoc]:
    """Rank the index's documents for a tokenized query."""
    check_scorer(scorer, index.schema)
    qd = assemble_qd(index, query)
    if not len(qd):
        return []
    scores = score(scorer, qd, index.vocab, settings)
    return rank_topk((ScoredDoc(d, float(s)) for d, s in zip(qd.doc_ids, scores)), k)


class OnTheFly:
    """Builds q-d matrices straight from document text, with no index.

    ``method="reference"`` evaluates every function through the scalar
    reference implementations; ``"vectorized"`` uses the same per-document
    kernel as the index build. Both apply the index's sparsity rule: a term
    whose document tf does not exceed ``sigma_index`` yields the absent block.
    """

    def __init__(self, context: InteractionContext, seg_config: SegmenterConfig, sigma_index: float = 0.0,
                 tokenizer: Tokenizer = tokenize, method: str = "vectorized"):
        if method not in ("vectorized", "reference"):
            raise ValueError("method must be 'vectorized' or 'reference'")
        self.context = context
        self.seg_config = seg_config
        self.sigma_index = sigma_index
        self.tokenizer = tokenizer
        self.method = method

    @property
    def vocab(self) -> Vocabulary:
        return self.context.vocab

    def _absent(self) -> np.ndarray:
        return np.broadcast_to(self.context.padding_vector(), (self.seg_config.n_b, self.context.schema.n_f))

    def matrix(self, query: Sequence[str], doc: Document) -> QDMatrix:
        matched = tuple(t for t in query if t in self.vocab)
        fresh = Document.from_text(doc.id, doc.text, self.tokenizer)
        counts = Counter(fresh.tokens)
        stored = sorted({t for t in matched if counts[t] > self.sigma_index})
        values = np.empty((len(matched), self.seg_config.n_b, self.context.schema.n_f), dtype=np.float32)
        values[:] = self._absent()
        if stored:
            segdoc = segment_document(fresh, self.seg_config)
            if self.method == "vectorized":
                blocks = dict(zip(stored, self.context.document_blocks(segdoc, stored)))
            else:
                blocks = {t: self.context.block(t, segdoc) for t in stored}
            for i, t in enumerate(matched):
                if t in blocks:
                    values[i] = blocks[t]
        return QDMatrix(matched, doc.id, values, len(fresh.tokens), self.context.schema)

    def matrices(self, query: Sequence[str], docs: Sequence[Document]) -> QDMatrices:
        mats = [self.matrix(query, d) for d in docs]
        matched = tuple(t for t in query if t in self.vocab)
        shape = (len(mats), len(matched), self.seg_config.n_b, self.context.schema.n_f)
        values = np.stack([m.values for m in mats]) if mats else np.zeros(shape, dtype=np.float32)
        return QDMatrices(matched, tuple(m.doc_id for m in mats), values,
                          np.array([m.doc_len for m in mats], dtype=np.int64), self.context.schema)

    def candidates(self, query: Sequence[str], docs: Iterable[Document]) -> list[Document]:
        """Documents in which some in-vocabulary query term has tf above the threshold."""
        matched = {t for t in query if t in self.vocab}
        out = []
        for d in docs:
            counts = Counter(self.tokenizer(d.text))
            if any(counts[t] > self.sigma_index for t in matched):
                out.append(d)
        return sorted(out, key=lambda d: d.id)

    def search(self, query: Sequence[str], docs: Sequence[Document], scorer: str = "bm25", k: int = 10,
               settings: ScoringSettings = ScoringSettings()) -> list[ScoredDoc]:
        check_scorer(scorer, self.context.schema)
        cands = self.candidates(query, docs)
        if not cands:
            return []
        qd = self.matrices(query, cands)
        scores = score(scorer, qd, self.vocab, settings)
        return rank_topk((ScoredDoc(d, float(s)) for d, s in zip(qd.doc_ids, scores)), k)


def score_onthefly(query: Sequence[str], doc: Document, scorer: str, onthefly: OnTheFly,
                   settings: ScoringSettings = ScoringSettings()) -> float:
    """Score one (query, document) pair without touching an index."""
    return float(score(scorer, onthefly.matrix(query, doc), onthefly.vocab, settings))
