"""
Index lookups against on-the-fly computation
============================================

The same q-d matrices can be computed from raw text at query time. The two
paths give the same numbers; the index is much faster per document.
"""

# %%
import time

import numpy as np

from segindex import build_index, build_vocabulary
from segindex.bench import run_benchmark
from segindex.embeddings import pseudo_provider
from segindex.index import assemble_qd
from segindex.interactions import InteractionContext, InteractionSchema
from segindex.retrieval import OnTheFly
from segindex.segmenter import SegmenterConfig
from segindex.synthetic import make_collection

col = make_collection(n_docs=1000, n_queries=20, seed=5)
vocab = build_vocabulary(col.docs)
provider = pseudo_provider(16, seed=0)
schema = InteractionSchema.full()
config = SegmenterConfig(n_b=20)

t0 = time.perf_counter()
index = build_index(col.docs, vocab, config, schema, provider)
print(f"build: {time.perf_counter() - t0:.2f}s, {index.posting_count()} postings")

# %% [markdown]
# Equality check on one query: the reference path evaluates every function
# with plain per-token loops.

# %%
reference = OnTheFly(InteractionContext(schema, vocab, provider), config, method="reference")
query = col.queries[0][1].split()
qd = assemble_qd(index, query)
by_id = {d.id: d for d in col.docs}
ref = reference.matrices(query, [by_id[d] for d in qd.doc_ids[:20]])
print("max |index - reference| over 20 documents:", np.abs(qd.values[:20] - ref.values).max())

# %% [markdown]
# Timing uses the vectorized on-the-fly kernel, the same one the build uses,
# so the comparison isolates the cost of recomputing per query.

# %%
fly = OnTheFly(InteractionContext(schema, vocab, provider), config)
queries = [q.split() for _, q in col.queries]
for scorer in ("bm25", "kernel_pool"):
    report = run_benchmark(index, col.docs, queries, fly, scorer, repetitions=3)
    print(report.format(), "\n")
