"""
The nine interaction functions
==============================

Each function maps a (term, segment) pair to one number. Small hand-made
embeddings make the values easy to check.
"""

# %%
import math

import numpy as np

from segindex.corpus import Document, build_vocabulary
from segindex.embeddings import ContextualOverlay, StaticProvider
from segindex.interactions import (
    FunctionParams,
    InteractionContext,
    InteractionSchema,
    cosine_sum,
    dot_sum,
    gaussian_max,
    log_cond_prob,
    max_softplus,
)
from segindex.segmenter import Segment

r = 1 / math.sqrt(2)
vectors = {
    "cat": (1.0, 0.0),
    "kitten": (r, r),
    "dog": (0.0, 1.0),
    "the": (0.0, 0.0),
}
provider = StaticProvider({k: np.array(v, dtype=np.float32) for k, v in vectors.items()}, dim=2)
segment = ["the", "kitten", "cat"]

# %% [markdown]
# Embedding sums: DOT adds raw inner products, COS adds cosines (the zero
# vector contributes nothing), GAUSS keeps the closest token.

# %%
print("DOT  ", dot_sum("cat", segment, provider))
print("COS  ", cosine_sum("cat", segment, provider), "= 1 + 1/sqrt(2)")
print("GAUSS", gaussian_max("dog", segment, provider), "closest is kitten:", math.exp(-(r**2 + (1 - r) ** 2)))

# %% [markdown]
# MAXSP passes each token embedding through ln(softplus(.)) before the dot
# product; a zero token gives ln(ln 2) in every component.

# %%
params = FunctionParams()
print("MAXSP", max_softplus("cat", ["the"], provider, params), math.log(math.log(2)))

# %% [markdown]
# LOGP is a Dirichlet-smoothed unigram log-probability. With no smoothing
# mass it is the plain relative frequency.

# %%
docs = [Document.from_text("a", "the cat sat on the mat"), Document.from_text("b", "the dog")]
vocab = build_vocabulary(docs, 0.0, 0.0)
for mu in (0.0, 1.0, 10.0):
    print(f"LOGP mu={mu:4}", round(log_cond_prob("cat", segment, vocab, FunctionParams(mu=mu)), 4))

# %% [markdown]
# LINAGG and MLP read contextual vectors of the term's occurrences. An
# overlay supplies them for chosen (document, segment, position) keys.

# %%
overlay = ContextualOverlay(provider, {("a", 0, 2): np.array([0.3, 0.9], dtype=np.float32)})
ctx = InteractionContext(
    InteractionSchema.full(), vocab, overlay,
    FunctionParams(a=[1.0, 0.0], b=0.0, mlp=[([[0.0, 1.0]], [0.1])]),
)
seg = Segment("a", 0, tuple(segment))
for name, value in zip(ctx.schema.functions, ctx.vector("cat", seg)):
    print(f"  {name:7s} {value:+.4f}")

# %% [markdown]
# An empty (padding) segment gives zeros everywhere except LOGP, which sits
# at the floor.

# %%
print(ctx.vector("cat", Segment("a", 5, ())))
