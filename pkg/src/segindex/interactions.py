"""Atomic term-segment interaction functions.

Each function maps a (vocabulary term, segment) pair to one scalar. The
scalar functions here are written for clarity and serve as the reference;
:meth:`InteractionContext.document_blocks` computes the same values for
many terms of one document at once and is what index builds use.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Vocabulary
from .embeddings import EmbeddingProvider, LogProbTable
from .segmenter import Segment, SegmentedDocument

FUNCTIONS = ("TF", "IIDF", "DOT", "COS", "GAUSS", "LINAGG", "MAXSP", "MLP", "LOGP")
EMBEDDING_FUNCTIONS = frozenset({"DOT", "COS", "GAUSS", "LINAGG", "MAXSP", "MLP"})
LOG_FLOOR = -30.0
MAXSP_TRANSFORMS = ("log_softplus", "softplus")


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionSchema:
    functions: tuple[str, ...]

    def __post_init__(self):
        if not self.functions:
            raise SchemaError("schema needs at least one function")
        unknown = [f for f in self.functions if f not in FUNCTIONS]
        if unknown:
            raise SchemaError(f"unknown interaction functions: {', '.join(unknown)}")
        if len(set(self.functions)) != len(self.functions):
            raise SchemaError("duplicate function in schema")

    @classmethod
    def parse(cls, text: str) -> "InteractionSchema":
        """Parse a comma-separated list such as ``"tf,iidf,cos,gauss"``."""
        names = [p.strip().upper() for p in text.split(",") if p.strip()]
        return cls(tuple(names))

    @classmethod
    def full(cls) -> "InteractionSchema":
        return cls(FUNCTIONS)

    @property
    def n_f(self) -> int:
        return len(self.functions)

    @property
    def needs_embeddings(self) -> bool:
        return any(f in EMBEDDING_FUNCTIONS for f in self.functions)

    def index(self, name: str) -> int:
        try:
            return self.functions.index(name)
        except ValueError:
            raise SchemaError(f"interaction function {name} is not in the index schema") from None

    def __contains__(self, name: str) -> bool:
        return name in self.functions

    def __str__(self) -> str:
        return ",".join(f.lower() for f in self.functions)


@dataclass
class FunctionParams:
    """Fixed parameters of the parametric interaction functions.

    ``a``/``b`` drive LINAGG, ``p`` optionally reweights the transformed token
    embedding in MAXSP, ``mlp`` is a list of ``(weights, bias)`` layers with
    weights shaped ``(out, in)``, and ``mu`` is the Dirichlet mass for LOGP.
    """

    a: np.ndarray | None = None
    b: float = 0.0
    p: np.ndarray | None = None
    mlp: list = field(default_factory=list)
    mu: float = 10.0
    log_floor: float = LOG_FLOOR
    gauss_sigma2: float = 1.0
    maxsp_transform: str = "log_softplus"

    def __post_init__(self):
        if self.a is not None:
            self.a = np.asarray(self.a, dtype=np.float64)
        if self.p is not None:
            self.p = np.asarray(self.p, dtype=np.float64)
        self.mlp = [
            (np.atleast_2d(np.asarray(w, dtype=np.float64)), np.atleast_1d(np.asarray(bias, dtype=np.float64)))
            for w, bias in self.mlp
        ]
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.gauss_sigma2 <= 0:
            raise ValueError("gauss.sigma2 must be > 0")
        if self.maxsp_transform not in MAXSP_TRANSFORMS:
            raise ValueError(f"maxsp_transform must be one of {MAXSP_TRANSFORMS}")
        if not math.isfinite(self.log_floor):
            raise ValueError("log_floor must be finite")

    @classmethod
    def default(cls, dim: int) -> "FunctionParams":
        """Deterministic defaults: mean-pooling LINAGG and a one-layer MLP."""
        a = np.full(dim, 1.0 / dim)
        return cls(a=a, b=1.0, mlp=[(a[None, :].copy(), np.array([1.0]))])

    def validate(self, dim: int) -> None:
        if self.a is not None and self.a.shape != (dim,):
            raise ValueError(f"params.a has {self.a.size} components, embeddings have {dim}")
        if self.p is not None and self.p.shape != (dim,):
            raise ValueError(f"params.p has {self.p.size} components, embeddings have {dim}")
        width = dim
        for i, (w, bias) in enumerate(self.mlp):
            if w.shape[1] != width:
                raise ValueError(f"mlp layer {i} expects input {w.shape[1]}, got {width}")
            if bias.shape != (w.shape[0],):
                raise ValueError(f"mlp layer {i} bias has {bias.size} entries, expected {w.shape[0]}")
            width = w.shape[0]
        if self.mlp and width != 1:
            raise ValueError(f"mlp output width must be 1, got {width}")

    def to_json(self) -> dict:
        return {
            "a": None if self.a is None else self.a.tolist(),
            "b": self.b,
            "p": None if self.p is None else self.p.tolist(),
            "mlp": [{"weights": w.tolist(), "bias": bias.tolist()} for w, bias in self.mlp],
            "mu": self.mu,
            "log_floor": self.log_floor,
            "gauss_sigma2": self.gauss_sigma2,
            "maxsp_transform": self.maxsp_transform,
        }

    def canonical(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict, dim: int | None = None) -> "FunctionParams":
        known = {"a", "b", "p", "mlp", "mu", "log_floor", "gauss_sigma2", "maxsp_transform"}
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown params keys: {', '.join(sorted(extra))}")
        base = cls.default(dim) if dim is not None else cls()
        kwargs = {k: obj[k] for k in known if k in obj}
        if "mlp" in kwargs:
            kwargs["mlp"] = [(layer["weights"], layer["bias"]) for layer in kwargs["mlp"]]
        params = cls(**{**base.__dict__, **kwargs})
        if dim is not None:
            params.validate(dim)
        return params


def load_params(path: str | Path, dim: int | None = None) -> FunctionParams:
    with open(path, encoding="utf-8") as fh:
        return FunctionParams.from_json(json.load(fh), dim)


# ---------------------------------------------------------------------------
# scalar reference functions
# ---------------------------------------------------------------------------


def _tokens(S: Segment | Sequence[str]) -> tuple[str, ...]:
    return S.tokens if isinstance(S, Segment) else tuple(S)


def tf(w: str, S: Segment | Sequence[str]) -> int:
    return _tokens(S).count(w)


def indicative_idf(w: str, S: Segment | Sequence[str], vocab: Vocabulary) -> float:
    if w not in vocab:
        raise KeyError(f"term {w!r} is not in the vocabulary")
    return vocab.idf_of(w) if w in _tokens(S) else 0.0


def _vec(provider: EmbeddingProvider, token: str) -> np.ndarray:
    return provider.vector(token).astype(np.float64)


def dot_sum(w: str, S: Segment | Sequence[str], provider: EmbeddingProvider) -> float:
    ew = _vec(provider, w)
    return float(sum(float(ew @ _vec(provider, t)) for t in _tokens(S)))


def cosine_sum(w: str, S: Segment | Sequence[str], provider: EmbeddingProvider) -> float:
    ew = _vec(provider, w)
    nw = np.linalg.norm(ew)
    if nw == 0:
        return 0.0
    total = 0.0
    for t in _tokens(S):
        et = _vec(provider, t)
        nt = np.linalg.norm(et)
        if nt > 0:
            total += float(ew @ et) / (nw * nt)
    return total


def gaussian_max(w: str, S: Segment | Sequence[str], provider: EmbeddingProvider,
                 sigma2: float = 1.0) -> float:
    ew = _vec(provider, w)
    best = 0.0
    for t in _tokens(S):
        diff = ew - _vec(provider, t)
        best = max(best, math.exp(-float(diff @ diff) / sigma2))
    return best


def log_softplus(x: np.ndarray) -> np.ndarray:
    """Elementwise ln(ln(1 + e^x)), finite for all finite x."""
    x = np.asarray(x, dtype=np.float64)
    sp = np.logaddexp(0.0, x)
    # softplus(x) ~ e^x underflows for very negative x; ln(e^x) = x there
    return np.where(x < -30.0, x, np.log(np.maximum(sp, np.finfo(np.float64).tiny)))


def _token_transform(x: np.ndarray, params: FunctionParams) -> np.ndarray:
    g = log_softplus(x) if params.maxsp_transform == "log_softplus" else np.logaddexp(0.0, x)
    return g if params.p is None else g * params.p


def max_softplus(w: str, S: Segment | Sequence[str], provider: EmbeddingProvider,
                 params: FunctionParams) -> float:
    toks = _tokens(S)
    if not toks:
        return 0.0
    ew = _vec(provider, w)
    return max(float(_token_transform(_vec(provider, t), params) @ ew) for t in toks)


def contextual_mean(w: str, S: Segment, provider: EmbeddingProvider) -> np.ndarray | None:
    """Mean contextual embedding of the occurrences of ``w`` in ``S``; None if absent."""
    vecs = [
        provider.contextual_vector(S.doc_id, S.index, pos, t).astype(np.float64)
        for pos, t in enumerate(S.tokens)
        if t == w
    ]
    if not vecs:
        return None
    return np.mean(vecs, axis=0)


def _as_segment(S: Segment | Sequence[str]) -> Segment:
    return S if isinstance(S, Segment) else Segment("", 0, tuple(S))


def linear_agg(w: str, S: Segment | Sequence[str], provider: EmbeddingProvider,
               params: FunctionParams) -> float:
    mean = contextual_mean(w, _as_segment(S), provider)
    if mean is None:
        return 0.0
    a = np.zeros(provider.dim) if params.a is None else params.a
    return float(a @ mean) + params.b


def run_mlp(layers: list, x: np.ndarray) -> np.ndarray:
    """Feed-forward pass with ReLU between layers and a linear output layer."""
    for i, (weights, bias) in enumerate(layers):
        x = weights @ x + bias
        if i < len(layers) - 1:
            x = np.maximum(x, 0.0)
    return x


def mlp_weight(w: str, S: Segment | Sequence[str], provider: EmbeddingProvider,
               params: FunctionParams) -> float:
    mean = contextual_mean(w, _as_segment(S), provider)
    if mean is None or not params.mlp:
        return 0.0
    return float(run_mlp(params.mlp, mean)[0])


def log_cond_prob(w: str, S: Segment | Sequence[str], stats: Vocabulary, params: FunctionParams,
                  logprobs: LogProbTable | None = None) -> float:
    """Dirichlet-smoothed log P(w | S), floored at ``params.log_floor``."""
    toks = _tokens(S)
    if not toks:
        return params.log_floor
    if logprobs is not None and isinstance(S, Segment):
        override = logprobs.get(S.doc_id, S.index, w)
        if override is not None:
            return max(override, params.log_floor)
    p_c = stats.collection_prob(w) if w in stats else 0.0
    numerator = toks.count(w) + params.mu * p_c
    if numerator <= 0:
        return params.log_floor
    return max(math.log(numerator / (len(toks) + params.mu)), params.log_floor)


# ---------------------------------------------------------------------------
# schema-level evaluation
# ---------------------------------------------------------------------------


@dataclass
class InteractionContext:
    """Everything needed to evaluate a schema on (term, segment) pairs."""

    schema: InteractionSchema
    vocab: Vocabulary
    provider: EmbeddingProvider | None = None
    params: FunctionParams | None = None
    logprobs: LogProbTable | None = None

    def __post_init__(self):
        if self.schema.needs_embeddings and self.provider is None:
            needed = sorted(set(self.schema.functions) & EMBEDDING_FUNCTIONS)
            raise SchemaError(f"functions {', '.join(needed)} need an embedding provider")
        if self.params is None:
            self.params = FunctionParams.default(self.provider.dim) if self.provider else FunctionParams()
        if self.provider is not None:
            self.params.validate(self.provider.dim)

    def padding_vector(self) -> np.ndarray:
        v = np.zeros(self.schema.n_f, dtype=np.float32)
        if "LOGP" in self.schema:
            v[self.schema.index("LOGP")] = self.params.log_floor
        return v

    def scalar(self, name: str, w: str, S: Segment) -> float:
        if name == "TF":
            return float(tf(w, S))
        if name == "IIDF":
            return indicative_idf(w, S, self.vocab)
        if name == "DOT":
            return dot_sum(w, S, self.provider)
        if name == "COS":
            return cosine_sum(w, S, self.provider)
        if name == "GAUSS":
            return gaussian_max(w, S, self.provider, self.params.gauss_sigma2)
        if name == "LINAGG":
            return linear_agg(w, S, self.provider, self.params)
        if name == "MAXSP":
            return max_softplus(w, S, self.provider, self.params)
        if name == "MLP":
            return mlp_weight(w, S, self.provider, self.params)
        if name == "LOGP":
            return log_cond_prob(w, S, self.vocab, self.params, self.logprobs)
        raise SchemaError(f"unknown function {name}")

    def vector(self, w: str, S: Segment) -> np.ndarray:
        """Interaction vector of ``w`` against ``S`` in schema order (reference path)."""
        if w not in self.vocab:
            raise KeyError(f"term {w!r} is not in the vocabulary")
        if not S.tokens:
            return self.padding_vector()
        return np.array([self.scalar(f, w, S) for f in self.schema.functions], dtype=np.float32)

    def block(self, w: str, doc: SegmentedDocument) -> np.ndarray:
        """``n_b x n_f`` block of ``w`` against every segment of ``doc`` (reference path)."""
        return np.stack([self.vector(w, S) for S in doc.segments])

    # -- vectorized path ---------------------------------------------------

    def document_blocks(self, doc: SegmentedDocument, terms: Sequence[str]) -> np.ndarray:
        """Blocks for several vocabulary terms against one document.

        Returns a float32 array shaped ``(len(terms), n_b, n_f)``.
        """
        schema, params = self.schema.functions, self.params
        m, n_b = len(terms), doc.n_b
        out = np.empty((m, n_b, len(schema)), dtype=np.float64)
        out[:] = self.padding_vector()
        if m == 0:
            return out.astype(np.float32)

        flat = [t for S in doc.segments for t in S.tokens]
        local: dict[str, int] = {}
        tok_ids = np.array([local.setdefault(t, len(local)) for t in flat], dtype=np.int64)
        term_ids = np.array([local.get(t, -1) for t in terms], dtype=np.int64)
        match = tok_ids[:, None] == term_ids[None, :]

        need = set(schema)
        emb = self.provider is not None and need & EMBEDDING_FUNCTIONS
        if emb:
            uniq = list(local)
            table = np.array([self.provider.vector(t) for t in uniq], dtype=np.float64).reshape(len(uniq), -1)
            E = table[tok_ids] if len(flat) else np.zeros((0, self.provider.dim))
            W = np.array([self.provider.vector(t) for t in terms], dtype=np.float64)
            dots = E @ W.T
            if "COS" in need:
                tn, wn = np.linalg.norm(E, axis=1), np.linalg.norm(W, axis=1)
                denom = tn[:, None] * wn[None, :]
                cos = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)
            if "MAXSP" in need:
                G = _token_transform(table, params)[tok_ids] if len(flat) else E
                soft = G @ W.T
            ctx_means = self._contextual_means(doc, terms, W) if need & {"LINAGG", "MLP"} else None

        idf = np.array([self.vocab.idf_of(t) for t in terms]) if "IIDF" in need else None
        p_c = np.array([self.vocab.collection_prob(t) for t in terms]) if "LOGP" in need else None
        col = {name: i for i, name in enumerate(schema)}

        start = 0
        for k, S in enumerate(doc.segments):
            end = start + len(S.tokens)
            if end == start:
                continue
            sl = slice(start, end)
            counts = match[sl].sum(axis=0)
            present = counts > 0
            if "TF" in col:
                out[:, k, col["TF"]] = counts
            if "IIDF" in col:
                out[:, k, col["IIDF"]] = np.where(present, idf, 0.0)
            if "DOT" in col:
                out[:, k, col["DOT"]] = dots[sl].sum(axis=0)
            if "COS" in col:
                out[:, k, col["COS"]] = cos[sl].sum(axis=0)
            if "GAUSS" in col:
                diff = E[sl][:, None, :] - W[None, :, :]
                sq = np.einsum("ijk,ijk->ij", diff, diff)
                out[:, k, col["GAUSS"]] = np.exp(-sq / params.gauss_sigma2).max(axis=0)
            if "MAXSP" in col:
                out[:, k, col["MAXSP"]] = soft[sl].max(axis=0)
            if "LINAGG" in col:
                a = np.zeros(W.shape[1]) if params.a is None else params.a
                out[:, k, col["LINAGG"]] = np.where(present, ctx_means[k] @ a + params.b, 0.0)
            if "MLP" in col:
                if params.mlp:
                    vals = run_mlp(params.mlp, ctx_means[k].T)[0]
                    out[:, k, col["MLP"]] = np.where(present, vals, 0.0)
                else:
                    out[:, k, col["MLP"]] = 0.0
            if "LOGP" in col:
                num = counts + params.mu * p_c
                with np.errstate(divide="ignore"):
                    lp = np.log(num / (len(S.tokens) + params.mu))
                lp = np.where(num > 0, np.maximum(lp, params.log_floor), params.log_floor)
                if self.logprobs is not None:
                    for j, t in enumerate(terms):
                        override = self.logprobs.get(doc.doc_id, k, t)
                        if override is not None:
                            lp[j] = max(override, params.log_floor)
                out[:, k, col["LOGP"]] = lp
            start = end
        return out.astype(np.float32)

    def _contextual_means(self, doc: SegmentedDocument, terms: Sequence[str], W: np.ndarray) -> list:
        """Per segment, an ``(m, dim)`` array of mean contextual vectors (rows of absent terms unused)."""
        if not self.provider.has_contextual(doc.doc_id):
            # every occurrence falls back to the term's own static vector
            return [W] * doc.n_b
        index = {t: j for j, t in enumerate(terms)}
        means = []
        for S in doc.segments:
            acc = np.zeros_like(W)
            cnt = np.zeros(len(terms))
            for pos, t in enumerate(S.tokens):
                j = index.get(t)
                if j is not None:
                    acc[j] += self.provider.contextual_vector(doc.doc_id, S.index, pos, t)
                    cnt[j] += 1
            means.append(acc / np.maximum(cnt, 1)[:, None])
        return means
