import numpy as np
import pytest

from segindex.embeddings import (
    ContextualOverlay,
    EmbeddingError,
    load_contextual,
    load_logprobs,
    load_static,
    pseudo_provider,
)

TOKENS = [f"tok{i}" for i in range(100)]


class TestStatic:
    def test_parse(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("2 3\na 1 0 0\nb 0 1 0\n")
        prov = load_static(p)
        assert prov.dim == 3
        np.testing.assert_array_equal(prov.static("a"), [1, 0, 0])
        assert prov.static("zzz") is None
        np.testing.assert_array_equal(prov.vector("zzz"), np.zeros(3))

    def test_short_row(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("2 3\na 1 0 0\nb 0 1\n")
        with pytest.raises(EmbeddingError, match=r":3:"):
            load_static(p)

    @pytest.mark.parametrize("body", ["1 2\na 1 nan\n", "2 2\na 1 0\na 0 1\n", "3 2\na 1 0\n", "x 2\n"])
    def test_rejects(self, tmp_path, body):
        p = tmp_path / "e.txt"
        p.write_text(body)
        with pytest.raises(EmbeddingError):
            load_static(p)

    def test_fingerprint_tracks_content(self, tmp_path):
        p, q = tmp_path / "a.txt", tmp_path / "b.txt"
        p.write_text("1 2\na 1 0\n")
        q.write_text("1 2\na 0 1\n")
        assert load_static(p).fingerprint != load_static(q).fingerprint


class TestPseudo:
    def test_deterministic(self):
        a, b = pseudo_provider(16, 3), pseudo_provider(16, 3)
        for t in TOKENS:
            np.testing.assert_array_equal(a.static(t), b.static(t))
            np.testing.assert_array_equal(a.static(t), a.static(t))

    def test_unit_norm(self):
        prov = pseudo_provider(16, 0)
        norms = np.array([np.linalg.norm(prov.static(t).astype(np.float64)) for t in TOKENS])
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_seeds_differ(self):
        a, b = pseudo_provider(16, 1), pseudo_provider(16, 2)
        assert all(not np.array_equal(a.static(t), b.static(t)) for t in TOKENS)

    def test_contextual_falls_back(self):
        prov = pseudo_provider(8, 0)
        np.testing.assert_array_equal(prov.contextual_vector("d", 0, 4, "x"), prov.static("x"))


class TestOverlay:
    def test_entry_and_fallback(self, tmp_path):
        base = pseudo_provider(3, 0)
        p = tmp_path / "c.jsonl"
        p.write_text('{"doc_id": "d1", "segment": 0, "position": 2, "values": [0.3, 0.1, 0.0]}\n')
        ov = load_contextual(p, base)
        np.testing.assert_allclose(ov.contextual_vector("d1", 0, 2, "x"), [0.3, 0.1, 0.0], rtol=1e-6)
        np.testing.assert_array_equal(ov.contextual_vector("d1", 0, 3, "x"), base.static("x"))
        np.testing.assert_array_equal(ov.contextual_vector("d2", 0, 2, "x"), base.static("x"))
        assert ov.has_contextual("d1") and not ov.has_contextual("d2")

    def test_empty_overlay_is_identity(self):
        base = pseudo_provider(4, 9)
        ov = ContextualOverlay(base, {})
        for i, t in enumerate(TOKENS[:20]):
            np.testing.assert_array_equal(ov.contextual_vector("d", i % 3, i, t), base.static(t))
            np.testing.assert_array_equal(ov.vector(t), base.vector(t))

    def test_dim_mismatch(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"doc_id": "d1", "segment": 0, "position": 0, "values": [1, 2]}\n')
        with pytest.raises(EmbeddingError, match=r":1:"):
            load_contextual(p, pseudo_provider(3))


class TestLogProbs:
    def test_load(self, tmp_path):
        p = tmp_path / "lp.jsonl"
        p.write_text('{"doc_id": "d", "segment": 1, "term": "x", "logprob": -2.5}\n')
        table = load_logprobs(p)
        assert table.get("d", 1, "x") == -2.5
        assert table.get("d", 0, "x") is None

    def test_positive_rejected(self, tmp_path):
        p = tmp_path / "lp.jsonl"
        p.write_text('{"doc_id": "d", "segment": 1, "term": "x", "logprob": 0.5}\n')
        with pytest.raises(EmbeddingError):
            load_logprobs(p)
