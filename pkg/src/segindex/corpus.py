"""Corpus ingestion, tokenization and vocabulary statistics."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

Tokenizer = Callable[[str], list]

_ALNUM_RUN = re.compile(r"[^\W_]+")


class CorpusError(ValueError):
    """Raised for malformed corpus files."""


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of alphanumeric characters, in order."""
    return _ALNUM_RUN.findall(text.lower())


TOKENIZERS: dict[str, Tokenizer] = {"alnum": tokenize}


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, doc_id: str, text: str, tokenizer: Tokenizer = tokenize) -> "Document":
        if not doc_id:
            raise CorpusError("document id must be non-empty")
        return cls(doc_id, text, tuple(tokenizer(text)))


def load_corpus(path: str | Path, tokenizer: Tokenizer = tokenize) -> list[Document]:
    """Read a JSON Lines corpus of ``{"id": ..., "text": ...}`` objects.

    Blank lines are skipped. Unknown fields are ignored.
    """
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(record, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            doc_id, text = record.get("id"), record.get("text")
            if not isinstance(doc_id, str) or not doc_id:
                raise CorpusError(f"{path}:{lineno}: missing or invalid string field 'id'")
            if not isinstance(text, str):
                raise CorpusError(f"{path}:{lineno}: missing or invalid string field 'text'")
            if doc_id in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
            seen.add(doc_id)
            docs.append(Document.from_text(doc_id, text, tokenizer))
    return docs


def write_corpus(docs: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "text": doc.text}, ensure_ascii=False) + "\n")


def document_frequency(docs: Iterable[Document], term: str) -> int:
    return sum(1 for d in docs if term in set(d.tokens))


def idf_value(collection_size: int, df: int) -> float:
    return math.log(collection_size / (df + 1))


@dataclass(frozen=True)
class Vocabulary:
    """Pruned term set with statistics computed over the full collection.

    ``cf`` holds collection frequencies and ``total_tokens`` the collection
    length; together they give the unigram collection model used by LOGP.
    """

    terms: tuple[str, ...]
    df: tuple[int, ...]
    cf: tuple[int, ...]
    idf: tuple[float, ...]
    collection_size: int
    avg_doc_len: float
    total_tokens: int
    term_ids: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "term_ids", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.term_ids

    def id_of(self, term: str) -> int:
        return self.term_ids[term]

    def idf_of(self, term: str) -> float:
        return self.idf[self.term_ids[term]]

    def df_of(self, term: str) -> int:
        return self.df[self.term_ids[term]]

    def collection_prob(self, term: str) -> float:
        """P(term | collection) under the maximum-likelihood unigram model."""
        if self.total_tokens == 0:
            return 0.0
        return self.cf[self.term_ids[term]] / self.total_tokens


def _prune_count(fraction: float, n: int) -> int:
    # round() first so that e.g. 0.1 * 30 does not ceil to 4
    return math.ceil(round(fraction * n, 9))


def build_vocabulary(
    docs: Sequence[Document], prune_top: float = 0.1, prune_bottom: float = 0.1
) -> Vocabulary:
    """Collect terms, drop the most and least frequent fractions, attach statistics.

    Terms are ranked by collection frequency (descending, ties by term).
    ``ceil(prune_top * U)`` terms are removed from the head of that ranking
    and ``ceil(prune_bottom * U)`` from its tail. df, idf and document length
    statistics always describe the unpruned collection.
    """
    if not docs:
        raise ValueError("cannot build a vocabulary from an empty collection")
    if prune_top < 0 or prune_bottom < 0 or prune_top + prune_bottom >= 1:
        raise ValueError("prune fractions must be >= 0 and sum to less than 1")

    cf: Counter = Counter()
    df: Counter = Counter()
    total = 0
    for doc in docs:
        cf.update(doc.tokens)
        df.update(set(doc.tokens))
        total += len(doc.tokens)

    ranked = sorted(cf, key=lambda t: (-cf[t], t))
    n_unique = len(ranked)
    head = _prune_count(prune_top, n_unique)
    tail = _prune_count(prune_bottom, n_unique)
    kept = ranked[head : n_unique - tail] if head + tail < n_unique else []
    if not kept:
        raise ValueError("empty vocabulary: pruning removed every term")

    terms = tuple(sorted(kept))
    size = len(docs)
    return Vocabulary(
        terms=terms,
        df=tuple(df[t] for t in terms),
        cf=tuple(cf[t] for t in terms),
        idf=tuple(idf_value(size, df[t]) for t in terms),
        collection_size=size,
        avg_doc_len=total / size,
        total_tokens=total,
    )
