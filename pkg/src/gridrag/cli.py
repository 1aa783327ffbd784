"""Operator CLI.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
TOPO_SEED sets the default seed for all seeded commands.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import evalgen
from .embedder import EmbedderConfig, ExternalEmbedder
from .errors import DataError
from .evalgen.harness import report_csv
from .fusion import LexicalScorer, rerank_with_scores, run_external_scorer
from .model import parse_corpus, parse_queries, serialize_corpus, serialize_queries
from .pipeline import (
    BuiltIndex,
    PipelineConfig,
    ROUTE_CHOICES,
    SearchConfig,
    build_indexes,
    doc_of_ref,
    featurizer,
    materialize_texts,
    search_pipeline,
)
from .router import RouterConfig
from .store import (
    Manifest,
    FORMAT_VERSION,
    corpus_checksum,
    default_created_at,
    index_file_sizes,
    load_index,
    save_index,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


def _default_seed() -> int:
    return int(os.environ.get("TOPO_SEED", "0"))


def _read_corpus(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read corpus {path}: {exc}") from exc
    return parse_corpus(text), text.encode("utf-8")


def _read_queries(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read queries {path}: {exc}") from exc
    return parse_queries(text)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        router=RouterConfig(tau=args.tau, window_tokens=args.window, stride_tokens=args.stride),
        embedder=EmbedderConfig(dim=args.dim),
        pq_m=args.pq_m,
        pq_seed=args.pq_seed,
    )


def _add_router_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=0.4, help="structural density threshold")
    p.add_argument("--window", type=int, default=64, help="sliding window size in tokens")
    p.add_argument("--stride", type=int, default=32, help="sliding window stride in tokens")


def _add_index_flags(p: argparse.ArgumentParser) -> None:
    _add_router_flags(p)
    p.add_argument("--dim", type=int, default=256, help="embedding dimension")
    p.add_argument("--pq-m", type=int, default=128, dest="pq_m", help="PQ subspace count")
    p.add_argument("--pq-seed", type=int, default=7, dest="pq_seed", help="PQ k-means seed")


def cmd_gen_corpus(args) -> int:
    spec = evalgen.CorpusSpec(n_docs=args.docs, seed=args.seed)
    docs, gold = evalgen.generate_corpus(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "corpus.jsonl").write_text(serialize_corpus(docs), encoding="utf-8")
    (out / "gold.json").write_text(json.dumps(gold, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(docs)} documents to {out / 'corpus.jsonl'}")
    return EXIT_OK


def cmd_gen_queries(args) -> int:
    docs, _ = _read_corpus(args.corpus)
    try:
        gold = json.loads(Path(args.gold).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read gold metadata {args.gold}: {exc}") from exc
    counts = evalgen.QueryCounts(type_a=args.type_a, type_b=args.type_b, type_c=args.type_c)
    queries = evalgen.generate_queries(docs, gold, counts, seed=args.seed)
    Path(args.out).write_text(serialize_queries(queries), encoding="utf-8")
    print(f"wrote {len(queries)} queries to {args.out}")
    return EXIT_OK


def cmd_index(args) -> int:
    docs, raw = _read_corpus(args.corpus)
    cfg = _pipeline_config(args)
    embed = None
    if args.embeddings:
        embed = ExternalEmbedder.load(args.embeddings, expected_dim=cfg.embedder.dim)
    built = build_indexes(docs, cfg, embed=embed)
    manifest = Manifest(
        format_version=FORMAT_VERSION,
        dim=cfg.embedder.dim,
        tau=cfg.router.tau,
        window_tokens=cfg.router.window_tokens,
        stride_tokens=cfg.router.stride_tokens,
        pq={"m": cfg.pq_m, "k": cfg.pq_k, "seed": cfg.pq_seed, "iters": cfg.pq_iters},
        embedder={"char_ngram": list(cfg.embedder.char_ngram), "hash_seed": cfg.embedder.hash_seed},
        counts={
            "narrative_blocks": len(built.dense),
            "tables": len(built.cells.tables),
            "cells_before_prune": built.cells.stats.cells_before_prune,
            "cells_after_prune": built.cells.stats.cells_after_prune,
            "centroids": built.cells.stats.centroids,
        },
        corpus_sha256=corpus_checksum(raw),
        created_at=default_created_at(),
    )
    save_index(args.out, built.dense, built.cells, manifest)
    sizes = index_file_sizes(args.out)
    print(
        f"indexed {manifest.counts['narrative_blocks']} narrative blocks and "
        f"{manifest.counts['tables']} tables "
        f"({manifest.counts['centroids']} centroids) into {args.out} ({sizes['total']} bytes)"
    )
    return EXIT_OK


def _load_with_corpus(args):
    dense, cells, manifest = load_index(args.index)
    docs = None
    if getattr(args, "corpus", None):
        docs, raw = _read_corpus(args.corpus)
        if corpus_checksum(raw) != manifest.corpus_sha256:
            raise DataError(
                f"corpus {args.corpus} does not match the checksum recorded in the index manifest"
            )
    cfg = PipelineConfig(
        router=RouterConfig(
            tau=manifest.tau, window_tokens=manifest.window_tokens, stride_tokens=manifest.stride_tokens
        ),
        embedder=EmbedderConfig(
            dim=manifest.dim,
            char_ngram=tuple(manifest.embedder["char_ngram"]),
            hash_seed=manifest.embedder["hash_seed"],
        ),
        pq_m=manifest.pq["m"],
        pq_k=manifest.pq["k"],
        pq_seed=manifest.pq["seed"],
        pq_iters=manifest.pq.get("iters", 25),
    )
    return dense, cells, manifest, cfg, docs


def cmd_search(args) -> int:
    if args.final_k is not None:
        args.k = args.final_k
    dense, cells, manifest, cfg, docs = _load_with_corpus(args)
    embed = None
    if args.embeddings:
        embed = ExternalEmbedder.load(args.embeddings, expected_dim=manifest.dim)
    rerank_mode = args.scorer if docs is not None and args.scorer != "none" else None
    if rerank_mode == "external" and not args.scorer_cmd:
        raise _UsageError("--scorer external requires --scorer-cmd")
    texts = materialize_texts(docs, cfg) if rerank_mode else {}

    if rerank_mode == "lexical":
        search_cfg = SearchConfig(
            k_dense=args.k_dense, k_table=args.k_table, final_k=args.k, route=args.route, mode=args.mode
        )
        candidates = search_pipeline(
            args.query, dense, cells, cfg.embedder, search_cfg, cfg.router,
            scorer=LexicalScorer(), texts=texts, embed=embed,
        )
    else:
        # fused candidates; the external scorer (when configured) reorders them
        search_cfg = SearchConfig(
            k_dense=args.k_dense, k_table=args.k_table,
            final_k=args.k_dense + args.k_table if rerank_mode else args.k,
            route=args.route, mode=args.mode,
        )
        candidates = search_pipeline(
            args.query, dense, cells, cfg.embedder, search_cfg, cfg.router, embed=embed
        )
        if rerank_mode == "external":
            fused = [replace(c, text=texts.get(c.ref, "")) for c in candidates]
            scores = run_external_scorer(args.scorer_cmd.split(), "cli", fused)
            candidates = rerank_with_scores(fused, scores, args.k)
    for rank, cand in enumerate(candidates, start=1):
        line = {
            "rank": rank,
            "ref": cand.ref,
            "doc": doc_of_ref(cand.ref),
            "route": cand.route,
            "score": cand.raw_score,
        }
        if cand.norm_score is not None:
            line["norm"] = cand.norm_score
        print(json.dumps(line, ensure_ascii=False))
    return EXIT_OK


def cmd_eval(args) -> int:
    dense, cells, manifest, cfg, docs = _load_with_corpus(args)
    queries = _read_queries(args.queries)
    # rerank and the linearized baseline need block texts, hence --corpus;
    # without it eval reports the fused ranking only
    built = BuiltIndex(dense=dense, cells=cells, narrative_blocks=len(dense), tables=len(cells.tables))
    eval_cfg = evalgen.EvalConfig(
        k_dense=args.k_dense, k_table=args.k_table, rerank=bool(docs is not None and args.rerank),
        baseline=bool(docs is not None and args.baseline),
    )
    report = evalgen.evaluate(
        docs or [], queries, built, cfg, eval_cfg,
        index_bytes=index_file_sizes(args.index), timings=args.timings,
    )
    payload = json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(payload, encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(report_csv(report), encoding="utf-8")
    print(payload, end="")
    return EXIT_OK


def cmd_dilution(args) -> int:
    widths = [int(w) for w in args.widths.split(",") if w.strip()]
    rows = evalgen.run_dilution_experiment(
        widths, n_tables=args.tables, n_queries=args.queries, seed=args.seed
    )
    csv = evalgen.dilution_csv(rows)
    if args.out:
        Path(args.out).write_text(csv, encoding="utf-8")
    print(csv, end="")
    return EXIT_OK


def cmd_bench(args) -> int:
    dense, cells, manifest, cfg, _ = _load_with_corpus(args)
    queries = _read_queries(args.queries)
    search_cfg = SearchConfig(k_dense=args.k_dense, k_table=args.k_table, final_k=args.k_dense + args.k_table)
    embed = featurizer(cfg.embedder)
    times = []
    for query in queries:
        t0 = time.perf_counter()
        search_pipeline(query.text, dense, cells, cfg.embedder, search_cfg, cfg.router, embed=embed)
        times.append((time.perf_counter() - t0) * 1000.0)
    arr = np.asarray(times)
    out = {
        "queries": len(times),
        "latency_ms": {"p50": float(np.percentile(arr, 50)), "p95": float(np.percentile(arr, 95))},
        "index_bytes": index_file_sizes(args.index),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="gridrag", description="Dual-path retrieval over mixed narrative and tabular corpora.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a seeded synthetic corpus")
    p.add_argument("--docs", type=int, default=200)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True, help="output directory for corpus.jsonl and gold.json")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("gen-queries", help="mint evaluation queries for a generated corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--type-a", type=int, default=20, dest="type_a")
    p.add_argument("--type-b", type=int, default=20, dest="type_b")
    p.add_argument("--type-c", type=int, default=10, dest="type_c")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_gen_queries)

    p = sub.add_parser("index", help="build and persist the dual index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings", help="TOPOEMB1 file keyed by exact text; replaces the built-in featurizer")
    _add_index_flags(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="query an index")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--final-k", type=int, default=None, dest="final_k", help="alias for --k")
    p.add_argument("--route", choices=ROUTE_CHOICES, default="both")
    p.add_argument("--mode", choices=("exact", "pq"), default="exact")
    p.add_argument("--corpus", help="corpus JSONL; enables cross-scorer reranking")
    p.add_argument("--k-dense", type=int, default=20, dest="k_dense")
    p.add_argument("--k-table", type=int, default=20, dest="k_table")
    p.add_argument("--scorer", choices=("lexical", "external", "none"), default="lexical")
    p.add_argument("--scorer-cmd", dest="scorer_cmd", help="command line for --scorer external")
    p.add_argument("--embeddings", help="TOPOEMB1 file for query vectors")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="evaluate an index against a query file")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--corpus", help="corpus JSONL; enables rerank and the linearized baseline")
    p.add_argument("--k-dense", type=int, default=20, dest="k_dense")
    p.add_argument("--k-table", type=int, default=20, dest="k_table")
    p.add_argument("--rerank", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--baseline", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--timings", action="store_true", help="include wall-clock latency (breaks byte reproducibility)")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--csv", help="write the CSV report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dilution", help="run the table-width robustness sweep")
    p.add_argument("--widths", default="5,10,20,30,40,50")
    p.add_argument("--tables", type=int, default=40)
    p.add_argument("--queries", type=int, default=40)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", help="write the CSV here")
    p.set_defaults(func=cmd_dilution)

    p = sub.add_parser("bench", help="report query latency and on-disk index size")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--k-dense", type=int, default=20, dest="k_dense")
    p.add_argument("--k-table", type=int, default=20, dest="k_table")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # anything unexpected
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
