"""Timing index lookups against on-the-fly matrix construction."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .corpus import Document
from .index import SegmentIndex, assemble_qd
from .retrieval import OnTheFly, ScoringSettings, check_scorer, score


@dataclass
class BenchReport:
    scorer: str
    queries: int
    pairs: int
    repetitions: int
    index_ms_per_pair: float
    onthefly_ms_per_pair: float
    speedup: float
    max_abs_score_diff: float

    def as_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        return (
            f"scorer={self.scorer} queries={self.queries} pairs={self.pairs} reps={self.repetitions}\n"
            f"index_ms_per_pair={self.index_ms_per_pair:.6f}\n"
            f"onthefly_ms_per_pair={self.onthefly_ms_per_pair:.6f}\n"
            f"speedup={self.speedup:.2f}\n"
            f"max_abs_score_diff={self.max_abs_score_diff:.3g}"
        )


def run_benchmark(
    index: SegmentIndex,
    docs: Sequence[Document],
    queries: Sequence[Sequence[str]],
    onthefly: OnTheFly,
    scorer: str = "bm25",
    repetitions: int = 3,
    settings: ScoringSettings = ScoringSettings(),
) -> BenchReport:
    """Score the same candidates through both arms, interleaving repetitions.

    Candidates per query are the index's posting-list union for the query
    terms. Times are wall-clock seconds per scored (query, document) pair.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    check_scorer(scorer, index.schema)
    by_id = {d.id: d for d in docs}
    index_time = fly_time = 0.0
    pairs = 0
    max_diff = 0.0
    for _ in range(repetitions):
        for query in queries:
            t0 = time.perf_counter()
            qd = assemble_qd(index, query)
            s_index = score(scorer, qd, index.vocab, settings) if len(qd) else np.zeros(0)
            t1 = time.perf_counter()
            cands = [by_id[d] for d in qd.doc_ids]
            t2 = time.perf_counter()
            fly = onthefly.matrices(query, cands)
            s_fly = score(scorer, fly, onthefly.vocab, settings) if len(fly) else np.zeros(0)
            t3 = time.perf_counter()
            index_time += t1 - t0
            fly_time += t3 - t2
            pairs += len(qd)
            if len(qd):
                max_diff = max(max_diff, float(np.max(np.abs(np.asarray(s_index) - np.asarray(s_fly)))))
    if pairs == 0:
        raise ValueError("no (query, document) pairs to time: every query missed the vocabulary")
    idx_ms = 1e3 * index_time / pairs
    fly_ms = 1e3 * fly_time / pairs
    return BenchReport(
        scorer=scorer,
        queries=len(queries),
        pairs=pairs // repetitions,
        repetitions=repetitions,
        index_ms_per_pair=idx_ms,
        onthefly_ms_per_pair=fly_ms,
        speedup=fly_ms / idx_ms if idx_ms > 0 else float("inf"),
        max_abs_score_diff=max_diff,
    )
