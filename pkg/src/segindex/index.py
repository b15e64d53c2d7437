"""Segment-level inverted index of precomputed interaction blocks.

Each posting pairs a document with an ``n_b x n_f`` block: one interaction
vector per standardized segment. The build follows a map/filter/reshape
pipeline: segment every document, drop (term, document) pairs whose
document-level tf does not exceed ``sigma_index``, compute blocks for the
survivors in parallel, then regroup the per-document results by term.
"""

from __future__ import annotations

import io
import logging
import struct
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .corpus import Document, Vocabulary
from .embeddings import EmbeddingProvider, LogProbTable
from .interactions import FunctionParams, InteractionContext, InteractionSchema
from .segmenter import SegmentedDocument, SegmenterConfig, segment_document

log = logging.getLogger(__name__)

MAGIC = b"SEINE\x00\x00\x01"
_HEADER = struct.Struct("<IIIIdddQQ")


class IndexFormatError(ValueError):
    pass


def fnv1a_64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def encode_varint(n: int) -> bytes:
    if n < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def decode_varint(buf: bytes, pos: int = 0) -> tuple[int, int]:
    """Decode one varint at ``pos``; returns (value, next position)."""
    result = shift = 0
    while True:
        if pos >= len(buf):
            raise IndexFormatError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7


@dataclass(frozen=True)
class IndexHeader:
    vocab_size: int
    n_b: int
    n_f: int
    schema: tuple[str, ...]
    sigma_index: float
    doc_count: int
    avg_doc_len: float
    log_floor: float
    total_tokens: int
    config: str
    magic: bytes = MAGIC

    @property
    def build_config_hash(self) -> int:
        return fnv1a_64(self.config.encode("utf-8"))


@dataclass(frozen=True)
class PostingEntry:
    doc_id: str
    block: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, PostingEntry) and self.doc_id == other.doc_id
                and np.array_equal(self.block, other.block))


@dataclass(eq=False)
class PostingList:
    docs: np.ndarray  # ascending document numbers, int64
    blocks: np.ndarray  # float32, (len(docs), n_b, n_f)

    def __len__(self) -> int:
        return len(self.docs)


@dataclass
class BuildStats:
    dense_values: int
    stored_values: int
    postings: int
    seconds: float


@dataclass(eq=False)
class SegmentIndex:
    header: IndexHeader
    vocab: Vocabulary
    doc_ids: tuple[str, ...]
    doc_lengths: np.ndarray
    segment_lengths: np.ndarray
    postings: list[PostingList]
    stats: BuildStats | None = field(default=None, compare=False)

    def __post_init__(self):
        self._doc_nums = {d: i for i, d in enumerate(self.doc_ids)}
        self.schema = InteractionSchema(self.header.schema)

    @property
    def n_b(self) -> int:
        return self.header.n_b

    @property
    def n_f(self) -> int:
        return self.header.n_f

    def doc_num(self, doc_id: str) -> int:
        return self._doc_nums[doc_id]

    def doc_length(self, doc_id: str) -> int:
        return int(self.doc_lengths[self._doc_nums[doc_id]])

    def posting_list(self, term: str) -> PostingList | None:
        tid = self.vocab.term_ids.get(term)
        return None if tid is None else self.postings[tid]

    def lookup(self, term: str) -> list[PostingEntry]:
        """Posting entries of ``term`` in ascending doc_id order; empty if unknown."""
        pl = self.posting_list(term)
        if pl is None:
            return []
        return [PostingEntry(self.doc_ids[d], pl.blocks[i]) for i, d in enumerate(pl.docs)]

    def absent_block(self) -> np.ndarray:
        block = np.zeros((self.n_b, self.n_f), dtype=np.float32)
        if "LOGP" in self.schema:
            block[:, self.schema.index("LOGP")] = self.header.log_floor
        return block

    def posting_count(self) -> int:
        return sum(len(pl) for pl in self.postings)

    def equals(self, other: "SegmentIndex") -> bool:
        """Extensional equality: header, vocabulary, doc table and every posting."""
        return (
            self.header == other.header
            and self.vocab == other.vocab
            and self.doc_ids == other.doc_ids
            and np.array_equal(self.doc_lengths, other.doc_lengths)
            and np.array_equal(self.segment_lengths, other.segment_lengths)
            and len(self.postings) == len(other.postings)
            and all(
                np.array_equal(a.docs, b.docs) and np.array_equal(a.blocks, b.blocks)
                for a, b in zip(self.postings, other.postings)
            )
        )


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def build_config_string(
    seg_config: SegmenterConfig,
    schema: InteractionSchema,
    params: FunctionParams,
    sigma_index: float,
    provider: EmbeddingProvider | None,
    logprobs: LogProbTable | None = None,
    metadata: dict | None = None,
) -> str:
    """Canonical ``key=value`` serialization of everything that shapes index contents."""
    items = {
        "embeddings": provider.fingerprint if provider is not None else "none",
        "logprobs": logprobs.fingerprint if logprobs is not None else "none",
        "params": params.canonical(),
        "schema": str(schema),
        "sigma_index": repr(float(sigma_index)),
    }
    items.update({str(k): str(v) for k, v in (metadata or {}).items()})
    body = "".join(f"{k}={items[k]}\n" for k in sorted(items))
    return seg_config.canonical() + body


def _partition(seq: Sequence, size: int) -> list[Sequence]:
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def build_index(
    docs: Sequence[Document],
    vocab: Vocabulary,
    seg_config: SegmenterConfig = SegmenterConfig(),
    schema: InteractionSchema | str = "tf,iidf",
    provider: EmbeddingProvider | None = None,
    params: FunctionParams | None = None,
    sigma_index: float = 0.0,
    *,
    logprobs: LogProbTable | None = None,
    workers: int = 1,
    partition_size: int = 64,
    metadata: dict | None = None,
) -> SegmentIndex:
    """Build the index for ``docs`` over the terms of ``vocab``.

    Work is split into document partitions of ``partition_size`` that are
    processed by ``workers`` threads; results are merged in canonical order
    so the output does not depend on either setting.
    """
    t0 = time.perf_counter()
    if isinstance(schema, str):
        schema = InteractionSchema.parse(schema)
    if sigma_index < 0:
        raise ValueError("sigma_index must be >= 0")
    if vocab.collection_size != len(docs):
        raise ValueError("vocabulary was not built from this collection")
    ctx = InteractionContext(schema, vocab, provider, params, logprobs)

    ordered = sorted(docs, key=lambda d: d.id)
    for a, b in zip(ordered, ordered[1:]):
        if a.id == b.id:
            raise ValueError(f"duplicate document id {a.id!r}")

    def map_partition(part: Sequence[tuple[int, Document]]):
        out = []
        for num, doc in part:
            segdoc = segment_document(doc, seg_config)
            counts = Counter(doc.tokens)
            terms = sorted(t for t, c in counts.items() if t in vocab and c > sigma_index)
            blocks = ctx.document_blocks(segdoc, terms)
            out.append((num, segdoc.segment_lengths(), [vocab.id_of(t) for t in terms], blocks))
        return out

    parts = _partition(list(enumerate(ordered)), max(1, partition_size))
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mapped = list(pool.map(map_partition, parts))
    else:
        mapped = [map_partition(p) for p in parts]

    # reshape: per-document results -> per-term posting lists
    seg_lengths = np.zeros((len(ordered), seg_config.n_b), dtype=np.int64)
    per_term: list[list[tuple[int, np.ndarray]]] = [[] for _ in range(len(vocab))]
    for result in mapped:
        for num, lengths, tids, blocks in result:
            seg_lengths[num] = lengths
            for tid, block in zip(tids, blocks):
                per_term[tid].append((num, block))

    empty = np.zeros((0, seg_config.n_b, schema.n_f), dtype=np.float32)
    postings = []
    for entries in per_term:
        entries.sort(key=lambda e: e[0])
        if entries:
            postings.append(PostingList(np.array([e[0] for e in entries], dtype=np.int64),
                                        np.stack([e[1] for e in entries])))
        else:
            postings.append(PostingList(np.zeros(0, dtype=np.int64), empty))

    header = IndexHeader(
        vocab_size=len(vocab),
        n_b=seg_config.n_b,
        n_f=schema.n_f,
        schema=schema.functions,
        sigma_index=float(sigma_index),
        doc_count=len(ordered),
        avg_doc_len=vocab.avg_doc_len,
        log_floor=ctx.params.log_floor,
        total_tokens=vocab.total_tokens,
        config=build_config_string(seg_config, schema, ctx.params, sigma_index, provider, logprobs, metadata),
    )
    n_postings = sum(len(p) for p in postings)
    cell = seg_config.n_b * schema.n_f
    stats = BuildStats(
        dense_values=len(vocab) * len(ordered) * cell,
        stored_values=n_postings * cell,
        postings=n_postings,
        seconds=time.perf_counter() - t0,
    )
    return SegmentIndex(
        header=header,
        vocab=vocab,
        doc_ids=tuple(d.id for d in ordered),
        doc_lengths=np.array([len(d.tokens) for d in ordered], dtype=np.int64),
        segment_lengths=seg_lengths,
        postings=postings,
        stats=stats,
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _put_str(out: io.BytesIO, s: str, wide: bool = False) -> None:
    raw = s.encode("utf-8")
    out.write(struct.pack("<I" if wide else "<H", len(raw)))
    out.write(raw)


def serialize(index: SegmentIndex) -> bytes:
    h = index.header
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(_HEADER.pack(h.vocab_size, h.n_b, h.n_f, h.doc_count, h.sigma_index,
                           h.avg_doc_len, h.log_floor, h.total_tokens, h.build_config_hash))
    out.write(struct.pack("<B", len(h.schema)))
    for name in h.schema:
        _put_str(out, name)
    _put_str(out, h.config, wide=True)

    v = index.vocab
    out.write(struct.pack("<I", len(v)))
    for term, df, cf, idf in zip(v.terms, v.df, v.cf, v.idf):
        _put_str(out, term)
        out.write(struct.pack("<IQd", df, cf, idf))

    out.write(struct.pack("<I", len(index.doc_ids)))
    for doc_id, length, segs in zip(index.doc_ids, index.doc_lengths, index.segment_lengths):
        _put_str(out, doc_id)
        out.write(struct.pack("<I", int(length)))
        out.write(np.asarray(segs, dtype="<u4").tobytes())

    for pl in index.postings:
        deltas = bytearray()
        prev = 0
        for d in pl.docs.tolist():
            deltas += encode_varint(d - prev)
            prev = d
        out.write(struct.pack("<II", len(pl), len(deltas)))
        out.write(deltas)
        out.write(np.ascontiguousarray(pl.blocks, dtype="<f4").tobytes())
    return out.getvalue()


def save(index: SegmentIndex, path: str | Path) -> None:
    Path(path).write_bytes(serialize(index))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise IndexFormatError("truncated index file")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str | struct.Struct):
        st = fmt if isinstance(fmt, struct.Struct) else struct.Struct(fmt)
        return st.unpack(self.take(st.size))

    def string(self, wide: bool = False) -> str:
        (n,) = self.unpack("<I" if wide else "<H")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise IndexFormatError("corrupt string in index file") from None


def deserialize(buf: bytes) -> SegmentIndex:
    r = _Reader(buf)
    if len(buf) < len(MAGIC) or r.take(len(MAGIC)) != MAGIC:
        raise IndexFormatError("not a SEINE index")
    vocab_size, n_b, n_f, doc_count, sigma, avgdl, log_floor, total_tokens, stored_hash = r.unpack(_HEADER)
    (n_schema,) = r.unpack("<B")
    schema = tuple(r.string() for _ in range(n_schema))
    config = r.string(wide=True)
    if n_schema != n_f:
        raise IndexFormatError("schema length does not match n_f")
    if fnv1a_64(config.encode("utf-8")) != stored_hash:
        raise IndexFormatError("build config hash mismatch")

    (n_terms,) = r.unpack("<I")
    if n_terms != vocab_size:
        raise IndexFormatError("vocabulary size does not match header")
    terms, dfs, cfs, idfs = [], [], [], []
    for _ in range(n_terms):
        terms.append(r.string())
        df, cf, idf = r.unpack("<IQd")
        dfs.append(df)
        cfs.append(cf)
        idfs.append(idf)
    vocab = Vocabulary(tuple(terms), tuple(dfs), tuple(cfs), tuple(idfs),
                       collection_size=doc_count, avg_doc_len=avgdl, total_tokens=total_tokens)

    (n_docs,) = r.unpack("<I")
    if n_docs != doc_count:
        raise IndexFormatError("doc table size does not match header")
    doc_ids, lengths, segs = [], [], []
    for _ in range(n_docs):
        doc_ids.append(r.string())
        (length,) = r.unpack("<I")
        lengths.append(length)
        segs.append(np.frombuffer(r.take(4 * n_b), dtype="<u4"))

    postings = []
    cell = n_b * n_f
    for _ in range(n_terms):
        count, nbytes = r.unpack("<II")
        raw = r.take(nbytes)
        docs = np.empty(count, dtype=np.int64)
        pos = prev = 0
        for i in range(count):
            delta, pos = decode_varint(raw, pos)
            prev += delta
            docs[i] = prev
        if pos != nbytes:
            raise IndexFormatError("posting doc-id run has trailing bytes")
        if count and (docs[-1] >= doc_count or np.any(np.diff(docs) <= 0)):
            raise IndexFormatError("posting doc ids out of range or not ascending")
        blocks = np.frombuffer(r.take(4 * count * cell), dtype="<f4").astype(np.float32)
        postings.append(PostingList(docs, blocks.reshape(count, n_b, n_f)))
    if r.pos != len(buf):
        raise IndexFormatError("trailing bytes after postings")

    header = IndexHeader(vocab_size, n_b, n_f, schema, sigma, doc_count, avgdl, log_floor,
                         total_tokens, config)
    return SegmentIndex(
        header=header,
        vocab=vocab,
        doc_ids=tuple(doc_ids),
        doc_lengths=np.array(lengths, dtype=np.int64),
        segment_lengths=np.array(segs, dtype=np.int64).reshape(n_docs, n_b),
        postings=postings,
    )


def load(path: str | Path) -> SegmentIndex:
    return deserialize(Path(path).read_bytes())


def lookup(index: SegmentIndex, term: str) -> list[PostingEntry]:
    return index.lookup(term)


# ---------------------------------------------------------------------------
# query-time assembly
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class QDMatrix:
    """Stacked interaction rows of one query against one document."""

    query_terms: tuple[str, ...]
    doc_id: str
    values: np.ndarray  # (len(query_terms), n_b, n_f)
    doc_len: int
    schema: InteractionSchema

    @property
    def rows(self) -> np.ndarray:
        return self.values


@dataclass(eq=False)
class QDMatrices:
    """Q-d matrices of one query against a set of candidate documents."""

    query_terms: tuple[str, ...]
    doc_ids: tuple[str, ...]
    values: np.ndarray  # (len(doc_ids), len(query_terms), n_b, n_f)
    doc_lens: np.ndarray
    schema: InteractionSchema

    def __len__(self) -> int:
        return len(self.doc_ids)

    def __iter__(self) -> Iterator[QDMatrix]:
        for i in range(len(self.doc_ids)):
            yield self[i]

    def __getitem__(self, key: int | str) -> QDMatrix:
        i = self.doc_ids.index(key) if isinstance(key, str) else key
        return QDMatrix(self.query_terms, self.doc_ids[i], self.values[i], int(self.doc_lens[i]), self.schema)


def assemble_qd(
    index: SegmentIndex, query: Sequence[str], candidates: Iterable[str] | None = None
) -> QDMatrices:
    """Stack posting blocks of the in-vocabulary query terms for each candidate.

    Rows follow query order (repeated terms give repeated rows). A document
    missing from a term's posting list gets the absent block. Without
    explicit candidates, the union of the matched terms' posting documents
    is used.
    """
    matched = [t for t in query if t in index.vocab]
    lists = [index.posting_list(t) for t in matched]
    if candidates is None:
        nums = np.unique(np.concatenate([pl.docs for pl in lists])) if lists else np.zeros(0, dtype=np.int64)
    else:
        nums = np.array(sorted({index.doc_num(d) for d in candidates}), dtype=np.int64)

    values = np.empty((len(nums), len(matched), index.n_b, index.n_f), dtype=np.float32)
    values[:] = index.absent_block()
    for j, pl in enumerate(lists):
        if not len(pl) or not len(nums):
            continue
        pos = np.searchsorted(pl.docs, nums)
        pos_c = np.minimum(pos, len(pl) - 1)
        hit = pl.docs[pos_c] == nums
        values[hit, j] = pl.blocks[pos_c[hit]]
    return QDMatrices(
        query_terms=tuple(matched),
        doc_ids=tuple(index.doc_ids[n] for n in nums),
        values=values,
        doc_lens=index.doc_lengths[nums],
        schema=index.schema,
    )
