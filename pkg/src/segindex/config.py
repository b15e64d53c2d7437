"""Flat ``key = value`` configuration with documented defaults.

Precedence, lowest first: defaults, config file, ``SEINE_WORKERS`` (workers
only), command-line flags.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Callable, Mapping


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in str(text).split(",") if x.strip())


# key: (parser, default, help)
KEYS: dict[str, tuple[Callable[[str], Any], Any, str]] = {
    "corpus": (str, "", "JSON Lines corpus with 'id' and 'text' fields"),
    "tokenizer": (str, "alnum", "tokenizer name"),
    "vocab.prune_top": (float, 0.1, "fraction of most frequent terms removed"),
    "vocab.prune_bottom": (float, 0.1, "fraction of least frequent terms removed"),
    "embeddings": (str, "", "word2vec text file with static embeddings"),
    "embeddings.pseudo_dim": (int, 0, "dimension of deterministic pseudo embeddings (0 = off)"),
    "embeddings.pseudo_seed": (int, 0, "seed of the pseudo embeddings"),
    "contextual": (str, "", "JSON Lines contextual embedding overlay"),
    "logprobs": (str, "", "JSON Lines per-(doc, segment, term) log-probabilities for LOGP"),
    "params": (str, "", "JSON file with interaction function parameters"),
    "gauss.sigma2": (float, 1.0, "bandwidth divisor of the Gaussian kernel interaction"),
    "schema": (str, "tf,iidf", "comma-separated interaction functions"),
    "sigma_index": (float, 0.0, "drop (term, doc) pairs whose document tf is <= this"),
    "segment.window": (int, 20, "TextTiling window size in tokens"),
    "segment.n_b": (int, 20, "segments per document"),
    "segment.depth_cutoff_stddev": (float, 0.5, "boundary cutoff: mean depth + this * stddev"),
    "segment.mode": (str, "tiling", "tiling, document or term"),
    "workers": (int, 1, "worker threads for index builds"),
    "partition_size": (int, 64, "documents per build partition"),
    "index": (str, "index.seine", "index file"),
    "queries": (str, "", "queries TSV: query_id<TAB>text"),
    "qrels": (str, "", "TREC qrels: qid 0 docid grade"),
    "run": (str, "run.txt", "TREC run file"),
    "run_tag": (str, "segindex", "run tag column"),
    "export": (str, "qd.jsonl", "q-d matrix export file"),
    "scorer": (str, "bm25", "dot, bm25, bm25_deepct or kernel_pool"),
    "top_k": (int, 10, "documents returned per query"),
    "bm25.k1": (float, 1.2, "BM25 k1"),
    "bm25.b": (float, 0.75, "BM25 b"),
    "kernel.mus": (_floats, (-0.9, -0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0), "kernel centers"),
    "kernel.sigmas": (_floats, (0.1,) * 10 + (0.001,), "kernel widths"),
    "kernel.weights": (_floats, (1.0,) * 11, "kernel combination weights"),
    "bench.repetitions": (int, 3, "benchmark repetitions"),
    "bench.max_queries": (int, 0, "cap on benchmark queries (0 = all)"),
    "eval.cutoffs": (_ints, (5, 10), "rank cutoffs for P and nDCG"),
    "term": (str, "", "term whose posting list inspect prints"),
}


class Config(Mapping):
    def __init__(self, values: Mapping[str, Any]):
        self._values = dict(values)

    def __getitem__(self, key: str) -> Any:
        return self._values[key]

    def __iter__(self):
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def path(self, key: str) -> Path | None:
        value = self._values[key]
        return Path(value) if value else None


def read_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        values[key.strip()] = value.strip()
    return values


def _convert(key: str, raw: Any) -> Any:
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    parse = KEYS[key][0]
    if not isinstance(raw, str):
        return raw
    try:
        return parse(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None


def resolve(file_values: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None,
            env: Mapping[str, str] | None = None) -> Config:
    env = os.environ if env is None else env
    values = {k: entry[1] for k, entry in KEYS.items()}
    for k, v in (file_values or {}).items():
        values[k] = _convert(k, v)
    if env.get("SEINE_WORKERS"):
        values["workers"] = _convert("workers", env["SEINE_WORKERS"])
    for k, v in (overrides or {}).items():
        values[k] = _convert(k, v)
    if values["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    if values["top_k"] < 1:
        raise ConfigError("top_k must be >= 1")
    if values["bench.repetitions"] < 1:
        raise ConfigError("bench.repetitions must be >= 1")
    if not values["eval.cutoffs"] or min(values["eval.cutoffs"]) < 1:
        raise ConfigError("eval.cutoffs must be positive integers")
    return Config(values)
