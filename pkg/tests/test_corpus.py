import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from segindex.corpus import (
    CorpusError,
    Document,
    build_vocabulary,
    document_frequency,
    load_corpus,
    tokenize,
    write_corpus,
)


def _write(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path


class TestTokenize:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("The CAT, the cat!", ["the", "cat", "the", "cat"]),
            ("", []),
            ("x2 y-3", ["x2", "y", "3"]),
            ("snake_case", ["snake", "case"]),
        ],
    )
    def test_examples(self, text, expected):
        assert tokenize(text) == expected

    @given(st.text())
    def test_idempotent(self, text):
        toks = tokenize(text)
        assert tokenize(" ".join(toks)) == toks


class TestLoadCorpus:
    def test_two_lines_in_order(self, tmp_path):
        p = _write(tmp_path / "c.jsonl", [{"id": "z", "text": "B a"}, {"id": "a", "text": "c"}])
        docs = load_corpus(p)
        assert [d.id for d in docs] == ["z", "a"]
        assert docs[0].tokens == ("b", "a")

    def test_empty_file(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text("")
        assert load_corpus(p) == []

    def test_missing_id_names_line(self, tmp_path):
        p = _write(tmp_path / "c.jsonl", [{"id": "a", "text": "x"}, {"text": "y"}])
        with pytest.raises(CorpusError, match=r"\.jsonl:2:"):
            load_corpus(p)

    def test_bad_json_names_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "a", "text": "x"}\n{oops\n')
        with pytest.raises(CorpusError, match=r"\.jsonl:2:"):
            load_corpus(p)

    def test_duplicate_id(self, tmp_path):
        p = _write(tmp_path / "c.jsonl", [{"id": "a", "text": "x"}, {"id": "a", "text": "y"}])
        with pytest.raises(CorpusError, match="'a'"):
            load_corpus(p)

    def test_write_roundtrip(self, tmp_path):
        docs = [Document.from_text("q", "Hello world"), Document.from_text("r", "")]
        write_corpus(docs, tmp_path / "c.jsonl")
        assert load_corpus(tmp_path / "c.jsonl") == docs


class TestDocumentFrequency:
    def test_counts(self):
        docs = [Document.from_text(f"d{i}", "x y") for i in range(5)]
        assert document_frequency(docs, "x") == 5
        assert document_frequency(docs, "nope") == 0

    def test_repeats_count_once(self):
        docs = [Document.from_text("a", "t t t"), Document.from_text("b", "u"),
                Document.from_text("c", "u"), Document.from_text("d", "v")]
        assert document_frequency(docs, "t") == 1


def _distinct_frequency_docs(n_terms):
    # term k appears k+1 times in total, in doc k
    return [Document.from_text(f"d{k:03d}", " ".join([f"w{k:03d}"] * (k + 1))) for k in range(n_terms)]


class TestBuildVocabulary:
    def test_prune_ten_terms(self):
        docs = _distinct_frequency_docs(10)
        vocab = build_vocabulary(docs, 0.1, 0.1)
        # oracle: rank by frequency, drop one from each end
        expected = sorted(f"w{k:03d}" for k in range(1, 9))
        assert list(vocab.terms) == expected

    def test_no_pruning_keeps_all(self):
        docs = _distinct_frequency_docs(10)
        vocab = build_vocabulary(docs, 0.0, 0.0)
        assert len(vocab) == 10

    def test_idf_hand_value(self):
        docs = [Document.from_text(f"d{i}", "x" if i < 4 else "y") for i in range(10)]
        vocab = build_vocabulary(docs, 0.0, 0.0)
        assert vocab.df_of("x") == 4
        assert vocab.idf_of("x") == pytest.approx(math.log(10 / 5), abs=1e-12)

    def test_invariants(self, collection, vocab):
        assert list(vocab.terms) == sorted(vocab.terms)
        assert [vocab.id_of(t) for t in vocab.terms] == list(range(len(vocab)))
        n = len(collection.docs)
        for t in vocab.terms:
            df = document_frequency(collection.docs, t)
            assert vocab.df_of(t) == df
            assert 1 <= df <= n
            assert vocab.idf_of(t) == pytest.approx(math.log(n / (df + 1)))

    def test_everything_pruned(self):
        docs = [Document.from_text("a", "x")]
        with pytest.raises(ValueError):
            build_vocabulary(docs, 0.5, 0.4)

    @given(st.integers(1, 60), st.sampled_from([0.0, 0.05, 0.1, 0.2]), st.sampled_from([0.0, 0.1, 0.25]))
    def test_prune_counts(self, n, top, bottom):
        docs = _distinct_frequency_docs(n)
        drop = math.ceil(round(top * n, 9)) + math.ceil(round(bottom * n, 9))
        if drop >= n:
            with pytest.raises(ValueError):
                build_vocabulary(docs, top, bottom)
        else:
            assert len(build_vocabulary(docs, top, bottom)) == n - drop
