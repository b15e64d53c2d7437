"""TextTiling segmentation and segment-count standardization.

Documents are split into topical spans at valleys of the similarity curve
between adjacent fixed-size token windows, then padded with empty segments
or squeezed into the last segment so every document has exactly ``n_b``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Document

MODES = ("tiling", "document", "term")


@dataclass(frozen=True)
class SegmenterConfig:
    window: int = 20
    n_b: int = 20
    depth_cutoff_stddev: float = 0.5
    mode: str = "tiling"

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("segment.window must be >= 1")
        if self.n_b < 1:
            raise ValueError("segment.n_b must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"segment.mode must be one of {MODES}, got {self.mode!r}")

    def canonical(self) -> str:
        return (
            f"segment.depth_cutoff_stddev={self.depth_cutoff_stddev!r}\n"
            f"segment.mode={self.mode}\nsegment.n_b={self.n_b}\nsegment.window={self.window}\n"
        )


@dataclass(frozen=True)
class Segment:
    doc_id: str
    index: int
    tokens: tuple[str, ...]

    @property
    def is_padding(self) -> bool:
        return not self.tokens

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class SegmentedDocument:
    doc_id: str
    segments: tuple[Segment, ...]
    raw_segment_count: int

    @property
    def n_b(self) -> int:
        return len(self.segments)

    @property
    def length(self) -> int:
        return sum(len(s) for s in self.segments)

    def segment_lengths(self) -> list[int]:
        return [len(s) for s in self.segments]


def window_similarity(left: Sequence[str], right: Sequence[str]) -> float:
    """Cosine similarity between the term-frequency vectors of two windows."""
    if not left or not right:
        raise ValueError("window_similarity requires non-empty windows")
    a, b = Counter(left), Counter(right)
    dot = sum(c * b[t] for t, c in a.items() if t in b)
    if dot == 0:
        return 0.0
    norm = math.sqrt(sum(c * c for c in a.values())) * math.sqrt(sum(c * c for c in b.values()))
    return min(1.0, dot / norm)


def depth_scores(similarities: Sequence[float]) -> np.ndarray:
    """Hill-climbing depth of every gap in a similarity curve.

    From each gap we climb left (then right) while the curve does not
    decrease; depth is the sum of both rises above the gap's own value.
    """
    sims = np.asarray(similarities, dtype=float)
    depths = np.zeros(len(sims))
    for i, s in enumerate(sims):
        left = s
        j = i - 1
        while j >= 0 and sims[j] >= left:
            left = sims[j]
            j -= 1
        right = s
        j = i + 1
        while j < len(sims) and sims[j] >= right:
            right = sims[j]
            j += 1
        depths[i] = (left - s) + (right - s)
    return depths


def texttile(
    doc: Document | Sequence[str], window: int = 20, depth_cutoff_stddev: float = 0.5
) -> list[tuple[str, ...]]:
    """Split a document's tokens into raw topical segments.

    Boundaries may only fall between windows, and only at gaps whose depth
    exceeds ``mean(depth) + depth_cutoff_stddev * std(depth)``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    tokens = tuple(doc.tokens if isinstance(doc, Document) else doc)
    if not tokens:
        return []
    windows = [tokens[i : i + window] for i in range(0, len(tokens), window)]
    if len(windows) < 3:
        # fewer than two gaps: every depth is zero
        return [tokens]

    sims = [window_similarity(windows[i], windows[i + 1]) for i in range(len(windows) - 1)]
    depths = depth_scores(sims)
    cutoff = depths.mean() + depth_cutoff_stddev * depths.std()
    boundaries = [i + 1 for i, d in enumerate(depths) if d > cutoff]

    segments = []
    start = 0
    for b in boundaries + [len(windows)]:
        segments.append(tuple(t for w in windows[start:b] for t in w))
        start = b
    return segments


def standardize(raw: Sequence[Sequence[str]], n_b: int, doc_id: str = "") -> SegmentedDocument:
    """Pad with empty segments or squeeze the overflow into the last segment."""
    if n_b < 1:
        raise ValueError("n_b must be >= 1")
    raw = [tuple(s) for s in raw]
    y = len(raw)
    if y <= n_b:
        parts = raw + [()] * (n_b - y)
    else:
        tail = tuple(t for s in raw[n_b - 1 :] for t in s)
        parts = raw[: n_b - 1] + [tail]
    segments = tuple(Segment(doc_id, k, toks) for k, toks in enumerate(parts))
    return SegmentedDocument(doc_id, segments, y)


def raw_segments(doc: Document, config: SegmenterConfig) -> list[tuple[str, ...]]:
    if not doc.tokens:
        return []
    if config.mode == "document":
        return [tuple(doc.tokens)]
    if config.mode == "term":
        return [(t,) for t in doc.tokens]
    return texttile(doc, config.window, config.depth_cutoff_stddev)


def segment_document(doc: Document, config: SegmenterConfig = SegmenterConfig()) -> SegmentedDocument:
    return standardize(raw_segments(doc, config), config.n_b, doc.id)
