import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from segindex.corpus import Document, build_vocabulary
from segindex.index import (
    IndexFormatError,
    assemble_qd,
    build_index,
    decode_varint,
    deserialize,
    encode_varint,
    fnv1a_64,
    load,
    lookup,
    save,
    serialize,
)
from segindex.interactions import InteractionContext, InteractionSchema
from segindex.retrieval import OnTheFly
from segindex.segmenter import SegmenterConfig

TOY_CONFIG = SegmenterConfig(window=20, n_b=2)


@pytest.fixture
def toy_index(toy_docs, toy_vocab):
    return build_index(toy_docs, toy_vocab, TOY_CONFIG, "tf,iidf")


def posting_ids(index, term):
    return [e.doc_id for e in index.lookup(term)]


class TestVarint:
    @given(st.lists(st.integers(0, 2**40), max_size=20))
    def test_roundtrip(self, values):
        buf = b"".join(encode_varint(v) for v in values)
        pos, out = 0, []
        for _ in values:
            v, pos = decode_varint(buf, pos)
            out.append(v)
        assert out == values and pos == len(buf)

    def test_fnv_known_values(self):
        assert fnv1a_64(b"") == 0xCBF29CE484222325
        assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C


class TestBuild:
    def test_toy_postings(self, toy_index):
        assert posting_ids(toy_index, "a") == ["d1"]
        assert posting_ids(toy_index, "b") == ["d1", "d2"]
        assert posting_ids(toy_index, "c") == ["d2"]

    def test_toy_blocks(self, toy_index, toy_vocab):
        block = toy_index.lookup("a")[0].block
        assert block.shape == (2, 2)
        np.testing.assert_allclose(block, [[1.0, toy_vocab.idf_of("a")], [0.0, 0.0]], rtol=1e-6)

    def test_sigma_drops_everything(self, toy_docs, toy_vocab):
        sigma = max(len(d.tokens) for d in toy_docs)
        index = build_index(toy_docs, toy_vocab, TOY_CONFIG, "tf,iidf", sigma_index=sigma)
        assert index.posting_count() == 0

    def test_dense_size(self, toy_docs, toy_vocab):
        index = build_index(toy_docs, toy_vocab, TOY_CONFIG, "tf,iidf")
        assert index.stats.dense_values == 24
        assert index.stats.stored_values == 4 * 2 * 2

    def test_containment(self, collection, vocab):
        index = build_index(collection.docs, vocab, SegmenterConfig(n_b=3), "tf")
        for t in vocab.terms:
            expected = sorted(d.id for d in collection.docs if t in d.tokens)
            assert posting_ids(index, t) == expected

    def test_worker_invariance(self, collection, vocab, provider16):
        kwargs = dict(seg_config=SegmenterConfig(n_b=4), schema=InteractionSchema.full(), provider=provider16)
        a = build_index(collection.docs, vocab, **kwargs, workers=1, partition_size=64)
        b = build_index(collection.docs, vocab, **kwargs, workers=4, partition_size=7)
        assert serialize(a) == serialize(b)

    def test_rejects_foreign_vocab(self, toy_vocab, collection):
        with pytest.raises(ValueError):
            build_index(collection.docs, toy_vocab)


class TestPersistence:
    def test_roundtrip(self, toy_index, tmp_path):
        save(toy_index, tmp_path / "t.seine")
        loaded = load(tmp_path / "t.seine")
        assert loaded.equals(toy_index)
        assert loaded.header == toy_index.header
        assert posting_ids(loaded, "b") == ["d1", "d2"]

    def test_corrupted_magic(self, toy_index):
        buf = bytearray(serialize(toy_index))
        buf[0] ^= 0xFF
        with pytest.raises(IndexFormatError, match="not a SEINE index"):
            deserialize(bytes(buf))

    def test_truncated(self, toy_index):
        buf = serialize(toy_index)
        for cut in (4, 40, len(buf) - 1):
            with pytest.raises(IndexFormatError):
                deserialize(buf[:cut])

    def test_trailing_bytes(self, toy_index):
        with pytest.raises(IndexFormatError):
            deserialize(serialize(toy_index) + b"\0")

    def test_config_tamper(self, toy_index):
        buf = serialize(toy_index)
        needle = b"schema=tf,iidf"
        pos = buf.index(needle)
        tampered = buf[:pos] + b"schema=tf,iidX" + buf[pos + len(needle):]
        with pytest.raises(IndexFormatError, match="hash"):
            deserialize(tampered)

    def test_rebuild_byte_identical(self, toy_docs, toy_vocab, tmp_path):
        for name in ("x.seine", "y.seine"):
            save(build_index(toy_docs, toy_vocab, TOY_CONFIG, "tf,iidf"), tmp_path / name)
        assert (tmp_path / "x.seine").read_bytes() == (tmp_path / "y.seine").read_bytes()


class TestLookup:
    def test_order_and_oov(self, toy_index):
        assert [e.doc_id for e in lookup(toy_index, "b")] == ["d1", "d2"]
        assert lookup(toy_index, "zzz") == []
        assert lookup(toy_index, "b") == lookup(toy_index, "b")


class TestAssemble:
    def test_row_order(self, toy_index):
        qd = assemble_qd(toy_index, ["b", "a"])
        m = qd["d1"]
        assert m.query_terms == ("b", "a")
        assert m.values.shape == (2, 2, 2)
        np.testing.assert_array_equal(m.values[0], toy_index.lookup("b")[0].block)
        np.testing.assert_array_equal(m.values[1], toy_index.lookup("a")[0].block)
        # a is absent from d2
        np.testing.assert_array_equal(qd["d2"].values[1], toy_index.absent_block())

    def test_oov_query(self, toy_index):
        qd = assemble_qd(toy_index, ["zzz", "qqq"])
        assert len(qd) == 0 and qd.query_terms == ()

    def test_explicit_candidates(self, toy_index):
        qd = assemble_qd(toy_index, ["a"], candidates=["d2"])
        assert qd.doc_ids == ("d2",)
        np.testing.assert_array_equal(qd.values[0, 0], toy_index.absent_block())

    def test_matches_onthefly(self, collection, vocab, provider16):
        config = SegmenterConfig(n_b=5)
        schema = InteractionSchema.full()
        index = build_index(collection.docs, vocab, config, schema, provider16)
        fly = OnTheFly(InteractionContext(schema, vocab, provider16), config, method="reference")
        by_id = {d.id: d for d in collection.docs}
        rng = np.random.default_rng(1)
        for _ in range(10):
            query = list(rng.choice(vocab.terms, size=int(rng.integers(1, 4))))
            qd = assemble_qd(index, query)
            ref = fly.matrices(query, [by_id[d] for d in qd.doc_ids])
            np.testing.assert_array_equal(qd.values[..., :2], ref.values[..., :2])
            np.testing.assert_allclose(qd.values, ref.values, rtol=1e-5, atol=1e-6)
