"""Command-line entry point: build, query, bench, export-qd, eval, inspect.

Exit codes: 0 success, 1 configuration or validation error, 2 runtime or
I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import corpus as corpus_mod
from .bench import run_benchmark
from .config import KEYS, Config, ConfigError, read_config_file, resolve
from .corpus import TOKENIZERS, build_vocabulary, load_corpus
from .embeddings import EmbeddingProvider, load_contextual, load_logprobs, load_static, pseudo_provider
from .index import assemble_qd, build_config_string, build_index, load, save
from .interactions import FunctionParams, InteractionContext, InteractionSchema, SchemaError, load_params
from .retrieval import (
    KernelPoolConfig,
    OnTheFly,
    ScoredDoc,
    ScoringSettings,
    check_scorer,
    rank_topk,
    score,
)
from .segmenter import SegmenterConfig
from .trec import evaluate, read_qrels, read_queries, read_run, write_run

log = logging.getLogger("segindex")

COMMANDS = ("build", "query", "bench", "export-qd", "eval", "inspect")


@dataclass
class BuildParts:
    tokenizer: corpus_mod.Tokenizer
    schema: InteractionSchema
    seg_config: SegmenterConfig
    provider: EmbeddingProvider | None
    params: FunctionParams
    logprobs: object | None

    def metadata(self, cfg: Config) -> dict:
        return {
            "tokenizer": cfg["tokenizer"],
            "vocab.prune_bottom": repr(cfg["vocab.prune_bottom"]),
            "vocab.prune_top": repr(cfg["vocab.prune_top"]),
        }


def _require(cfg: Config, key: str) -> str:
    if not cfg[key]:
        raise ConfigError(f"missing required setting '{key}'")
    return cfg[key]


def build_parts(cfg: Config) -> BuildParts:
    try:
        schema = InteractionSchema.parse(cfg["schema"])
        seg_config = SegmenterConfig(cfg["segment.window"], cfg["segment.n_b"],
                                     cfg["segment.depth_cutoff_stddev"], cfg["segment.mode"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg["tokenizer"] not in TOKENIZERS:
        raise ConfigError(f"unknown tokenizer {cfg['tokenizer']!r}")
    if cfg["embeddings"] and cfg["embeddings.pseudo_dim"]:
        raise ConfigError("set either 'embeddings' or 'embeddings.pseudo_dim', not both")
    if schema.needs_embeddings and not (cfg["embeddings"] or cfg["embeddings.pseudo_dim"]):
        raise ConfigError(f"schema '{schema}' needs embeddings: set 'embeddings' or 'embeddings.pseudo_dim'")

    provider = None
    if cfg["embeddings"]:
        provider = load_static(cfg["embeddings"])
    elif cfg["embeddings.pseudo_dim"]:
        if cfg["embeddings.pseudo_dim"] < 1:
            raise ConfigError("embeddings.pseudo_dim must be >= 1")
        provider = pseudo_provider(cfg["embeddings.pseudo_dim"], cfg["embeddings.pseudo_seed"])
    if cfg["contextual"]:
        if provider is None:
            raise ConfigError("'contextual' needs a base embedding provider")
        provider = load_contextual(cfg["contextual"], provider)

    dim = provider.dim if provider is not None else None
    try:
        params = load_params(cfg["params"], dim) if cfg["params"] else (
            FunctionParams.default(dim) if dim else FunctionParams())
        params.gauss_sigma2 = cfg["gauss.sigma2"]
        if params.gauss_sigma2 <= 0:
            raise ValueError("gauss.sigma2 must be > 0")
    except ValueError as exc:
        raise ConfigError(f"invalid params: {exc}") from None
    logprobs = load_logprobs(cfg["logprobs"]) if cfg["logprobs"] else None
    return BuildParts(TOKENIZERS[cfg["tokenizer"]], schema, seg_config, provider, params, logprobs)


def settings_from(cfg: Config) -> ScoringSettings:
    try:
        kernels = KernelPoolConfig(cfg["kernel.mus"], cfg["kernel.sigmas"], cfg["kernel.weights"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ScoringSettings(cfg["bm25.k1"], cfg["bm25.b"], kernels)


def cmd_build(cfg: Config, out=sys.stdout) -> None:
    parts = build_parts(cfg)
    t0 = time.perf_counter()
    docs = load_corpus(_require(cfg, "corpus"), parts.tokenizer)
    if not docs:
        raise ConfigError("corpus is empty")
    vocab = build_vocabulary(docs, cfg["vocab.prune_top"], cfg["vocab.prune_bottom"])
    index = build_index(docs, vocab, parts.seg_config, parts.schema, parts.provider, parts.params,
                        cfg["sigma_index"], logprobs=parts.logprobs, workers=cfg["workers"],
                        partition_size=cfg["partition_size"], metadata=parts.metadata(cfg))
    save(index, cfg["index"])
    elapsed = time.perf_counter() - t0
    h = index.header
    print(f"index: {cfg['index']}", file=out)
    print(f"|v|={h.vocab_size} n_b={h.n_b} n_f={h.n_f} schema={index.schema} docs={h.doc_count}", file=out)
    print(f"postings={index.posting_count()} stored_values={index.stats.stored_values} "
          f"dense_values={index.stats.dense_values}", file=out)
    print(f"build_seconds={elapsed:.3f}", file=out)


def _load_index(cfg: Config):
    return load(_require(cfg, "index"))


def _queries(cfg: Config, tokenizer) -> list[tuple[str, list[str]]]:
    return [(qid, tokenizer(text)) for qid, text in read_queries(_require(cfg, "queries"))]


def cmd_query(cfg: Config, out=sys.stdout) -> None:
    index = _load_index(cfg)
    scorer = cfg["scorer"]
    try:
        check_scorer(scorer, index.schema)
    except SchemaError as exc:
        raise ConfigError(str(exc)) from None
    settings = settings_from(cfg)
    tokenizer = TOKENIZERS[cfg["tokenizer"]]
    rankings = []
    latencies, pairs = [], 0
    for qid, tokens in _queries(cfg, tokenizer):
        t0 = time.perf_counter()
        qd = assemble_qd(index, tokens)
        if len(qd):
            scores = score(scorer, qd, index.vocab, settings)
            ranking = rank_topk((ScoredDoc(d, float(s)) for d, s in zip(qd.doc_ids, scores)), cfg["top_k"])
        else:
            ranking = []
        latencies.append(time.perf_counter() - t0)
        pairs += len(qd)
        if not qd.query_terms:
            log.warning("query %s has no in-vocabulary terms; no results", qid)
        rankings.append((qid, ranking))
    lines = write_run(rankings, cfg["run_tag"], cfg["run"])
    lat = np.array(latencies) * 1e3 if latencies else np.zeros(1)
    print(f"run: {cfg['run']} ({lines} lines, {len(rankings)} queries)", file=out)
    print(f"latency_ms mean={lat.mean():.4f} p95={np.percentile(lat, 95):.4f}", file=out)
    per_pair = 1e3 * sum(latencies) / pairs if pairs else 0.0
    print(f"ms_per_qd_pair={per_pair:.6f} pairs={pairs}", file=out)


def cmd_bench(cfg: Config, out=sys.stdout) -> None:
    index = _load_index(cfg)
    parts = build_parts(cfg)
    expected = build_config_string(parts.seg_config, parts.schema, parts.params, cfg["sigma_index"],
                                   parts.provider, parts.logprobs, parts.metadata(cfg))
    if expected != index.header.config:
        raise ConfigError("configuration differs from the one the index was built with")
    docs = load_corpus(_require(cfg, "corpus"), parts.tokenizer)
    try:
        check_scorer(cfg["scorer"], index.schema)
    except SchemaError as exc:
        raise ConfigError(str(exc)) from None
    context = InteractionContext(parts.schema, index.vocab, parts.provider, parts.params, parts.logprobs)
    fly = OnTheFly(context, parts.seg_config, cfg["sigma_index"], parts.tokenizer)
    queries = [toks for _, toks in _queries(cfg, parts.tokenizer)]
    if cfg["bench.max_queries"]:
        queries = queries[: cfg["bench.max_queries"]]
    report = run_benchmark(index, docs, queries, fly, cfg["scorer"], cfg["bench.repetitions"],
                           settings_from(cfg))
    print(report.format(), file=out)


def cmd_export_qd(cfg: Config, out=sys.stdout) -> None:
    index = _load_index(cfg)
    tokenizer = TOKENIZERS[cfg["tokenizer"]]
    schema = [f.lower() for f in index.schema.functions]
    records = 0
    with open(cfg["export"], "w", encoding="utf-8") as fh:
        for qid, tokens in _queries(cfg, tokenizer):
            qd = assemble_qd(index, tokens)
            for m in qd:
                rec = {"query_id": qid, "doc_id": m.doc_id, "terms": list(m.query_terms),
                       "schema": schema, "rows": m.values.tolist()}
                fh.write(json.dumps(rec) + "\n")
                records += 1
    print(f"export: {cfg['export']} ({records} records)", file=out)


def cmd_eval(cfg: Config, out=sys.stdout) -> None:
    run = read_run(_require(cfg, "run"))
    qrels = read_qrels(_require(cfg, "qrels"))
    result = evaluate(run, qrels, cfg["eval.cutoffs"])
    print(f"queries\tall\t{len(result.per_query)}", file=out)
    print(result.format(), file=out)


def cmd_inspect(cfg: Config, out=sys.stdout) -> None:
    index = _load_index(cfg)
    h = index.header
    lengths = np.array([len(pl) for pl in index.postings])
    print(f"magic={h.magic!r} build_config_hash={h.build_config_hash:016x}", file=out)
    print(f"|v|={h.vocab_size} n_b={h.n_b} n_f={h.n_f} docs={h.doc_count} "
          f"avg_doc_len={h.avg_doc_len:.3f} sigma_index={h.sigma_index}", file=out)
    print(f"schema={index.schema}", file=out)
    if len(lengths):
        print(f"postings total={lengths.sum()} mean={lengths.mean():.3f} max={lengths.max()} "
              f"empty_lists={(lengths == 0).sum()}", file=out)
    if cfg["term"]:
        entries = index.lookup(cfg["term"])
        print(f"term {cfg['term']!r}: {len(entries)} postings", file=out)
        for e in entries:
            print(f"  {e.doc_id} {json.dumps(e.block.tolist())}", file=out)


HANDLERS = {
    "build": cmd_build,
    "query": cmd_query,
    "bench": cmd_bench,
    "export-qd": cmd_export_qd,
    "eval": cmd_eval,
    "inspect": cmd_inspect,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="segindex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("-v", "--verbose", action="store_true")
        for key, (_, default, help_text) in KEYS.items():
            p.add_argument(f"--{key}", dest=key, default=argparse.SUPPRESS,
                           help=f"{help_text} (default: {default})")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config")
    verbose = args.pop("verbose")
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = read_config_file(config_path) if config_path else {}
        cfg = resolve(file_values, args)
        HANDLERS[command](cfg, sys.stdout)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
