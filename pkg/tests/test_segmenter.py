import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from segindex.corpus import Document
from segindex.segmenter import (
    SegmenterConfig,
    depth_scores,
    segment_document,
    standardize,
    texttile,
    window_similarity,
)


class TestWindowSimilarity:
    def test_identical(self):
        assert window_similarity(["a", "b", "a"], ["a", "b", "a"]) == pytest.approx(1.0)

    def test_disjoint(self):
        assert window_similarity(["a", "b"], ["c", "d"]) == 0.0

    def test_half_overlap(self):
        assert window_similarity(["a", "b"], ["a", "c"]) == pytest.approx(0.5)


class TestDepth:
    def test_single_valley(self):
        d = depth_scores([0.9, 0.1, 0.8])
        np.testing.assert_allclose(d, [0.0, 0.8 + 0.7, 0.0])

    def test_flat(self):
        np.testing.assert_array_equal(depth_scores([0.4, 0.4, 0.4]), 0.0)


class TestTexttile:
    def test_short_document(self):
        toks = [f"x{i}" for i in range(7)]
        assert texttile(toks, window=20) == [tuple(toks)]

    def test_empty(self):
        assert texttile([], window=20) == []

    def test_topic_shift(self):
        a = ["a1", "a2", "a3", "a4"] * 5
        b = ["b1", "b2", "b3", "b4"] * 5
        toks = a * 3 + b * 3
        segs = texttile(toks, window=20)
        assert segs == [tuple(a * 3), tuple(b * 3)]

    def test_identical_windows(self):
        toks = ["p", "q", "r", "s"] * 5 * 6
        assert texttile(toks, window=20) == [tuple(toks)]

    @given(st.lists(st.sampled_from("abcdefg"), max_size=300), st.integers(1, 30))
    def test_concatenation(self, toks, window):
        segs = texttile(toks, window=window)
        assert [t for s in segs for t in s] == toks
        assert all(segs)


class TestStandardize:
    def test_pads(self):
        raw = [("a",), ("b",), ("c",)]
        doc = standardize(raw, 5, "d")
        assert doc.n_b == 5
        assert doc.segments[3].tokens == () and doc.segments[4].tokens == ()
        assert doc.segments[3].is_padding
        assert doc.raw_segment_count == 3

    def test_squeezes(self):
        raw = [(f"t{i}",) for i in range(8)]
        doc = standardize(raw, 5)
        assert [s.tokens for s in doc.segments[:4]] == raw[:4]
        assert doc.segments[4].tokens == ("t4", "t5", "t6", "t7")

    def test_identity(self):
        raw = [("a", "b"), ("c",), ("d",)]
        assert [s.tokens for s in standardize(raw, 3).segments] == raw

    @given(st.lists(st.lists(st.sampled_from("xyz"), min_size=1, max_size=5), max_size=30), st.integers(1, 25))
    def test_token_conservation(self, raw, n_b):
        doc = standardize(raw, n_b)
        assert doc.n_b == n_b
        assert [t for s in doc.segments for t in s.tokens] == [t for s in raw for t in s]
        assert [s.index for s in doc.segments] == list(range(n_b))


class TestSegmentDocument:
    def test_modes(self):
        doc = Document.from_text("d", "one two three")
        whole = segment_document(doc, SegmenterConfig(n_b=2, mode="document"))
        assert whole.segment_lengths() == [3, 0]
        per_term = segment_document(doc, SegmenterConfig(n_b=5, mode="term"))
        assert per_term.segment_lengths() == [1, 1, 1, 0, 0]

    def test_empty_document(self):
        doc = segment_document(Document.from_text("e", ""), SegmenterConfig(n_b=3))
        assert doc.segment_lengths() == [0, 0, 0]
        assert doc.raw_segment_count == 0

    def test_nonempty_has_raw_segment(self, collection):
        for d in collection.docs[:20]:
            seg = segment_document(d, SegmenterConfig(n_b=4))
            assert seg.raw_segment_count >= 1
            assert seg.length == len(d.tokens)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            SegmenterConfig(n_b=0)
        with pytest.raises(ValueError):
            SegmenterConfig(mode="sentences")
