"""TREC-style queries, runs, qrels and effectiveness metrics (P@k, MAP, nDCG@k)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunEntry:
    query_id: str
    doc_id: str
    rank: int
    score: float
    tag: str


def read_queries(path: str | Path) -> list[tuple[str, str]]:
    """Read ``query_id<TAB>query text`` lines, preserving file order."""
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            qid, sep, text = line.partition("\t")
            if not sep or not qid:
                raise ValueError(f"{path}:{lineno}: expected 'query_id<TAB>text'")
            queries.append((qid, text))
    return queries


def write_run(rankings: Mapping[str, Sequence] | Iterable[tuple[str, Sequence]], tag: str,
              path: str | Path) -> int:
    """Write ``qid Q0 docid rank score tag`` lines; returns the number of lines.

    ``rankings`` maps query ids to ranked :class:`ScoredDoc`-like items
    (anything with ``doc_id`` and ``score``) in rank order.
    """
    items = rankings.items() if isinstance(rankings, Mapping) else rankings
    if not tag or any(c.isspace() for c in tag):
        raise ValueError("run tag must be a non-empty string without whitespace")
    lines = []
    for qid, ranking in items:
        for rank, hit in enumerate(ranking, start=1):
            lines.append(f"{qid} Q0 {hit.doc_id} {rank} {hit.score!r} {tag}\n")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(lines)
    except OSError as exc:
        raise OSError(f"cannot write run file {path}: {exc.strerror}") from exc
    return len(lines)


def read_run(path: str | Path) -> dict[str, list[RunEntry]]:
    run: dict[str, list[RunEntry]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 'qid Q0 docid rank score tag'")
            qid, _, doc_id, rank, score, tag = parts
            run.setdefault(qid, []).append(RunEntry(qid, doc_id, int(rank), float(score), tag))
    for entries in run.values():
        entries.sort(key=lambda e: e.rank)
    return run


def read_qrels(path: str | Path) -> dict[str, dict[str, int]]:
    """Read ``qid 0 docid grade`` judgments."""
    qrels: dict[str, dict[str, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 'qid 0 docid grade'")
            qid, _, doc_id, grade = parts
            qrels.setdefault(qid, {})[doc_id] = int(grade)
    return qrels


def write_qrels(qrels: Mapping[str, Mapping[str, int]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for qid, judged in qrels.items():
            for doc_id, grade in judged.items():
                fh.write(f"{qid} 0 {doc_id} {grade}\n")


def precision_at(ranked: Sequence[str], judged: Mapping[str, int], k: int) -> float:
    return sum(1 for d in ranked[:k] if judged.get(d, 0) > 0) / k


def average_precision(ranked: Sequence[str], judged: Mapping[str, int]) -> float:
    n_rel = sum(1 for g in judged.values() if g > 0)
    if n_rel == 0:
        return 0.0
    hits, total = 0, 0.0
    for i, d in enumerate(ranked, start=1):
        if judged.get(d, 0) > 0:
            hits += 1
            total += hits / i
    return total / n_rel


def dcg(grades: Sequence[int], k: int) -> float:
    return sum((2**g - 1) / math.log2(i + 1) for i, g in enumerate(grades[:k], start=1))


def ndcg_at(ranked: Sequence[str], judged: Mapping[str, int], k: int) -> float:
    ideal = dcg(sorted((max(g, 0) for g in judged.values()), reverse=True), k)
    if ideal == 0:
        return 0.0
    return dcg([max(judged.get(d, 0), 0) for d in ranked], k) / ideal


@dataclass
class Evaluation:
    per_query: dict[str, dict[str, float]]
    mean: dict[str, float]

    def format(self) -> str:
        lines = [f"{name}\tall\t{value:.4f}" for name, value in self.mean.items()]
        return "\n".join(lines)


def _doc_list(entries: Sequence) -> list[str]:
    return [e if isinstance(e, str) else e.doc_id for e in entries]


def evaluate(run: Mapping[str, Sequence], qrels: Mapping[str, Mapping[str, int]],
             cutoffs: Sequence[int] = (5, 10)) -> Evaluation:
    """Per-query and mean P@k, nDCG@k and MAP.

    Queries in the run without judgments are skipped with a warning; means
    are taken over queries that have at least one relevant document.
    """
    if not cutoffs:
        raise ValueError("at least one cutoff is required")
    names = [f"P@{k}" for k in cutoffs] + [f"nDCG@{k}" for k in cutoffs] + ["MAP"]
    per_query: dict[str, dict[str, float]] = {}
    for qid, entries in run.items():
        judged = qrels.get(qid)
        if judged is None:
            log.warning("query %s is not in the qrels; skipped", qid)
            continue
        if not any(g > 0 for g in judged.values()):
            continue
        ranked = _doc_list(entries)
        m = {f"P@{k}": precision_at(ranked, judged, k) for k in cutoffs}
        m.update({f"nDCG@{k}": ndcg_at(ranked, judged, k) for k in cutoffs})
        m["MAP"] = average_precision(ranked, judged)
        per_query[qid] = m
    mean = {n: (sum(q[n] for q in per_query.values()) / len(per_query) if per_query else 0.0) for n in names}
    return Evaluation(per_query, mean)
