"""Synthetic topical collections with queries and graded judgments.

Documents are concatenations of topical sections. Each section draws most
of its words from one topic's vocabulary and the rest from a shared pool,
so TextTiling has real boundaries to find and queries have known answers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Document


@dataclass
class SyntheticCollection:
    docs: list[Document]
    queries: list[tuple[str, str]]
    qrels: dict[str, dict[str, int]]
    topics: dict[str, list[int]]  # doc_id -> topic of each section


def _zipf_weights(n: int, s: float = 1.1) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def make_collection(
    n_docs: int = 100,
    n_topics: int = 8,
    words_per_topic: int = 40,
    common_words: int = 30,
    doc_len: tuple[int, int] = (40, 200),
    sections: tuple[int, int] = (1, 4),
    topic_share: float = 0.75,
    n_queries: int = 20,
    query_len: tuple[int, int] = (1, 3),
    seed: int = 0,
) -> SyntheticCollection:
    rng = np.random.default_rng(seed)
    topic_words = [[f"t{k}w{j}" for j in range(words_per_topic)] for k in range(n_topics)]
    common = [f"c{j}" for j in range(common_words)]
    pw, pc = _zipf_weights(words_per_topic), _zipf_weights(common_words)

    docs, topics = [], {}
    width = len(str(n_docs - 1))
    for i in range(n_docs):
        doc_id = f"d{i:0{width}d}"
        length = int(rng.integers(doc_len[0], doc_len[1] + 1))
        n_sec = int(rng.integers(sections[0], sections[1] + 1))
        sec_topics = [int(t) for t in rng.choice(n_topics, size=n_sec, replace=n_sec > n_topics)]
        cuts = np.sort(rng.choice(np.arange(1, length), size=min(n_sec - 1, length - 1), replace=False))
        bounds = [0, *cuts.tolist(), length]
        words = []
        for t, (a, b) in zip(sec_topics, zip(bounds, bounds[1:])):
            for _ in range(b - a):
                if rng.random() < topic_share:
                    words.append(topic_words[t][rng.choice(words_per_topic, p=pw)])
                else:
                    words.append(common[rng.choice(common_words, p=pc)])
        docs.append(Document.from_text(doc_id, " ".join(words)))
        topics[doc_id] = sec_topics

    queries, qrels = [], {}
    for q in range(n_queries):
        t = int(rng.integers(n_topics))
        n_terms = int(rng.integers(query_len[0], query_len[1] + 1))
        # skip the topic's head words: they tend to be pruned as too frequent
        picks = rng.choice(np.arange(2, min(words_per_topic, 20)), size=n_terms, replace=False)
        qid = f"q{q}"
        queries.append((qid, " ".join(topic_words[t][j] for j in picks)))
        judged = {}
        for doc_id, secs in topics.items():
            share = secs.count(t) / len(secs)
            if share > 0:
                judged[doc_id] = 2 if share >= 0.5 else 1
        qrels[qid] = judged
    return SyntheticCollection(docs, queries, qrels, topics)
