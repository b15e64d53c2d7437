"""Embedding providers: static word2vec files, contextual overlays, pseudo vectors.

Every provider answers two kinds of lookups. ``static`` maps a token to its
vector. ``contextual`` maps a (doc_id, segment, position, token) occurrence
to a vector, where ``position`` is the token's offset inside its segment.
Providers without contextual data fall back to the static vector.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path

import numpy as np

DTYPE = np.float32


class EmbeddingError(ValueError):
    pass


def content_digest(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


class EmbeddingProvider:
    """Base provider. Subclasses implement :meth:`static`."""

    dim: int

    def static(self, token: str) -> np.ndarray | None:
        raise NotImplementedError

    def contextual(self, doc_id: str, segment: int, position: int, token: str) -> np.ndarray | None:
        return self.static(token)

    def has_contextual(self, doc_id: str) -> bool:
        """True if any contextual vector differs from the static fallback for ``doc_id``."""
        return False

    def vector(self, token: str) -> np.ndarray:
        """Static vector, or the zero vector for absent tokens."""
        v = self.static(token)
        return np.zeros(self.dim, dtype=DTYPE) if v is None else v

    def contextual_vector(self, doc_id: str, segment: int, position: int, token: str) -> np.ndarray:
        v = self.contextual(doc_id, segment, position, token)
        return np.zeros(self.dim, dtype=DTYPE) if v is None else v

    @property
    def fingerprint(self) -> str:
        raise NotImplementedError


class StaticProvider(EmbeddingProvider):
    def __init__(self, vectors: dict[str, np.ndarray], dim: int, fingerprint: str = "static"):
        if dim < 1:
            raise EmbeddingError("embedding dim must be >= 1")
        self.dim = dim
        self._vectors = vectors
        self._fingerprint = fingerprint

    def static(self, token: str) -> np.ndarray | None:
        return self._vectors.get(token)

    def __len__(self) -> int:
        return len(self._vectors)

    @property
    def fingerprint(self) -> str:
        return self._fingerprint


def load_static(path: str | Path) -> StaticProvider:
    """Read a word2vec text file: a ``count dim`` header, then ``token v1 ... v_dim`` rows."""
    raw = Path(path).read_bytes()
    lines = raw.decode("utf-8").splitlines()
    if not lines:
        raise EmbeddingError(f"{path}:1: missing 'count dim' header")
    header = lines[0].split()
    if len(header) != 2:
        raise EmbeddingError(f"{path}:1: header must be 'count dim'")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise EmbeddingError(f"{path}:1: header must hold two integers") from None
    if dim < 1:
        raise EmbeddingError(f"{path}:1: dim must be >= 1")

    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        if len(parts) != dim + 1:
            raise EmbeddingError(f"{path}:{lineno}: expected {dim} values, found {len(parts) - 1}")
        token = parts[0]
        if token in vectors:
            raise EmbeddingError(f"{path}:{lineno}: duplicate token {token!r}")
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=DTYPE)
        except ValueError:
            raise EmbeddingError(f"{path}:{lineno}: non-numeric value") from None
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError(f"{path}:{lineno}: non-finite value")
        vec.setflags(write=False)
        vectors[token] = vec
    if len(vectors) != count:
        raise EmbeddingError(f"{path}: header declares {count} rows, found {len(vectors)}")
    return StaticProvider(vectors, dim, fingerprint=f"static:{content_digest(raw)}")


class PseudoProvider(EmbeddingProvider):
    """Deterministic unit vectors keyed on (seed, token); a stand-in for trained embeddings."""

    def __init__(self, dim: int, seed: int = 0):
        if dim < 1:
            raise EmbeddingError("embedding dim must be >= 1")
        self.dim = dim
        self.seed = seed
        self._key = str(seed).encode("utf-8")
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def static(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(token.encode("utf-8"), key=self._key, digest_size=16).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            v = rng.standard_normal(self.dim)
            vec = (v / np.linalg.norm(v)).astype(DTYPE)
            vec.setflags(write=False)
            with self._lock:
                vec = self._cache.setdefault(token, vec)
        return vec

    @property
    def fingerprint(self) -> str:
        return f"pseudo:dim={self.dim}:seed={self.seed}"


def pseudo_provider(dim: int, seed: int = 0) -> PseudoProvider:
    return PseudoProvider(dim, seed)


class ContextualOverlay(EmbeddingProvider):
    """Answers contextual lookups from precomputed entries, else defers to ``base``."""

    def __init__(self, base: EmbeddingProvider, entries: dict[tuple[str, int, int], np.ndarray],
                 fingerprint: str = "overlay"):
        for key, vec in entries.items():
            if vec.shape != (base.dim,):
                raise EmbeddingError(
                    f"contextual vector for {key} has dim {vec.shape[0]}, provider dim is {base.dim}"
                )
        self.base = base
        self.dim = base.dim
        self._entries = entries
        self._docs = {k[0] for k in entries}
        self._fingerprint = fingerprint

    def static(self, token: str) -> np.ndarray | None:
        return self.base.static(token)

    def contextual(self, doc_id: str, segment: int, position: int, token: str) -> np.ndarray | None:
        vec = self._entries.get((doc_id, segment, position))
        if vec is not None:
            return vec
        return self.base.contextual(doc_id, segment, position, token)

    def has_contextual(self, doc_id: str) -> bool:
        return doc_id in self._docs or self.base.has_contextual(doc_id)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def fingerprint(self) -> str:
        return f"{self.base.fingerprint}+{self._fingerprint}"


def load_contextual(path: str | Path, base: EmbeddingProvider) -> ContextualOverlay:
    """Wrap ``base`` with vectors read from a contextual-values JSON Lines file."""
    raw = Path(path).read_bytes()
    entries: dict[tuple[str, int, int], np.ndarray] = {}
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            key = (str(rec["doc_id"]), int(rec["segment"]), int(rec["position"]))
            vec = np.asarray(rec["values"], dtype=DTYPE)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise EmbeddingError(f"{path}:{lineno}: malformed contextual record ({exc})") from None
        if vec.shape != (base.dim,):
            raise EmbeddingError(
                f"{path}:{lineno}: dim mismatch, expected {base.dim} values, found {vec.size}"
            )
        if not np.all(np.isfinite(vec)):
            raise EmbeddingError(f"{path}:{lineno}: non-finite value")
        vec.setflags(write=False)
        entries[key] = vec
    return ContextualOverlay(base, entries, fingerprint=f"ctx:{content_digest(raw)}")


class LogProbTable:
    """Externally produced log P(term | segment) values keyed on (doc_id, segment, term).

    Lets a real language model's probabilities replace the smoothed unigram
    estimate used by the LOGP interaction.
    """

    def __init__(self, values: dict[tuple[str, int, str], float], fingerprint: str = "logprob"):
        self._values = values
        self.fingerprint = fingerprint

    def get(self, doc_id: str, segment: int, term: str) -> float | None:
        return self._values.get((doc_id, segment, term))

    def __len__(self) -> int:
        return len(self._values)


def load_logprobs(path: str | Path) -> LogProbTable:
    """Read JSON Lines records with fields doc_id, segment, term, logprob."""
    raw = Path(path).read_bytes()
    values: dict[tuple[str, int, str], float] = {}
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            key = (str(rec["doc_id"]), int(rec["segment"]), str(rec["term"]))
            value = float(rec["logprob"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise EmbeddingError(f"{path}:{lineno}: malformed logprob record ({exc})") from None
        if not np.isfinite(value) or value > 0:
            raise EmbeddingError(f"{path}:{lineno}: logprob must be finite and <= 0")
        values[key] = value
    return LogProbTable(values, fingerprint=f"logprob:{content_digest(raw)}")
