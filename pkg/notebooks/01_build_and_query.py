"""
Building an index and querying it
=================================

A synthetic topical collection goes through the whole pipeline: vocabulary,
segmentation, index build, save/load, ranked retrieval and evaluation.
"""

# %%
import tempfile
from pathlib import Path

from segindex import build_index, build_vocabulary, evaluate, load, save, search
from segindex.embeddings import pseudo_provider
from segindex.segmenter import SegmenterConfig, segment_document
from segindex.synthetic import make_collection

col = make_collection(n_docs=200, n_queries=15, seed=0)
print(len(col.docs), "documents;", col.docs[0].id, col.docs[0].text[:80], "...")

# %% [markdown]
# The vocabulary keeps the middle of the frequency distribution. The most
# frequent shared words and the rarest topic words are dropped.

# %%
vocab = build_vocabulary(col.docs, prune_top=0.1, prune_bottom=0.1)
print("|v| =", len(vocab), " avg doc length =", round(vocab.avg_doc_len, 1))
for t in vocab.terms[:5]:
    print(f"  {t:8s} df={vocab.df_of(t):3d} idf={vocab.idf_of(t):+.3f}")

# %% [markdown]
# Every document becomes exactly `n_b` segments. TextTiling finds the topic
# boundaries; short documents are padded, long ones squeezed.

# %%
config = SegmenterConfig(window=20, n_b=6)
doc = col.docs[0]
seg = segment_document(doc, config)
print("section topics:", col.topics[doc.id])
print("raw segments:", seg.raw_segment_count, " lengths:", seg.segment_lengths())

# %%
provider = pseudo_provider(16, seed=0)
index = build_index(col.docs, vocab, config, "tf,iidf,cos,gauss", provider)
print("postings:", index.posting_count(), " stored/dense values:",
      index.stats.stored_values, "/", index.stats.dense_values)

# %%
path = Path(tempfile.mkdtemp()) / "demo.seine"
save(index, path)
index = load(path)
print(path.name, path.stat().st_size, "bytes")

# %% [markdown]
# Ranking reads only the stored interaction columns a scorer needs: TF for
# BM25 and COS for kernel pooling.

# %%
qid, text = col.queries[0]
print(qid, repr(text))
for scorer in ("bm25", "kernel_pool"):
    hits = search(index, text.split(), scorer, k=5)
    print(f"  {scorer:12s}", [(h.doc_id, round(h.score, 3)) for h in hits])

# %%
for scorer in ("bm25", "kernel_pool"):
    run = {q: search(index, t.split(), scorer, k=10) for q, t in col.queries}
    result = evaluate(run, col.qrels, cutoffs=(5, 10))
    print(scorer, {k: round(v, 3) for k, v in result.mean.items()})
