"""Evaluation harness: run queries through retrieval systems and score them.

Three system rows are reported:
    dual-fused      routed dual-path retrieval, min-max fused order
    dual-reranked   same candidates, final order from the lexical cross-scorer
    naive-linearized  every block (tables flattened to Markdown) as one dense
                      vector; the flat single-vector baseline

Latency numbers are only collected on request because wall-clock values
would break byte-reproducible reports.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..dense_index import DenseIndex, dense_index_from_pairs, search_dense
from ..embedder import EmbedderConfig, embed_text
from ..fusion import LexicalScorer
from ..model import Document, Query, Table, TEXT
from ..pipeline import (
    BuiltIndex,
    PipelineConfig,
    SearchConfig,
    doc_ranking,
    materialize_texts,
    search_pipeline,
)
from .metrics import ndcg_at_k, recall_at_k

QUERY_TYPE_ORDER = ("A", "B", "C")


def linearize_markdown(table: Table) -> str:
    """GitHub-style pipe Markdown; what the flat baseline embeds."""
    lines = ["| " + " | ".join(table.headers) + " |"]
    lines.append("| " + " | ".join("---" for _ in table.headers) + " |")
    for row in table.rows:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def build_linearized_index(docs: Sequence[Document], cfg: EmbedderConfig) -> DenseIndex:
    """One vector per block with tables blindly flattened to Markdown."""
    pairs = []
    for doc in docs:
        for idx, block in enumerate(doc.blocks):
            text = block.content if block.kind == TEXT else linearize_markdown(block.table)
            pairs.append((f"{doc.id}#b{idx}", embed_text(text, cfg)))
    return dense_index_from_pairs(pairs, dim=cfg.dim)


@dataclass(frozen=True)
class EvalConfig:
    k_dense: int = 20
    k_table: int = 20
    ndcg_k: int = 10
    recall_k: int = 20
    rerank: bool = True
    baseline: bool = True


def _aggregate(per_query: list[tuple[str, float, float]], ndcg_k: int, recall_k: int) -> dict:
    per_type: dict[str, dict] = {}
    for qtype in QUERY_TYPE_ORDER:
        rows = [(n, r) for t, n, r in per_query if t == qtype]
        if not rows:
            continue
        per_type[qtype] = {
            f"ndcg_at_{ndcg_k}": sum(n for n, _ in rows) / len(rows),
            f"recall_at_{recall_k}": sum(r for _, r in rows) / len(rows),
            "n_queries": len(rows),
        }
    overall = {
        f"ndcg_at_{ndcg_k}": sum(n for _, n, _ in per_query) / len(per_query) if per_query else 0.0,
        f"recall_at_{recall_k}": sum(r for _, _, r in per_query) / len(per_query) if per_query else 0.0,
        "n_queries": len(per_query),
    }
    return {"per_type": per_type, "overall": overall}


def evaluate(
    docs: Sequence[Document],
    queries: Sequence[Query],
    built: BuiltIndex,
    pipe_cfg: PipelineConfig = PipelineConfig(),
    eval_cfg: EvalConfig = EvalConfig(),
    *,
    index_bytes: dict | None = None,
    timings: bool = False,
) -> dict:
    """Score every query against the configured systems and aggregate per type."""
    search_cfg = SearchConfig(
        k_dense=eval_cfg.k_dense,
        k_table=eval_cfg.k_table,
        final_k=eval_cfg.k_dense + eval_cfg.k_table,
        route="both",
    )
    texts = materialize_texts(docs, pipe_cfg) if eval_cfg.rerank else {}
    scorer = LexicalScorer()
    naive = build_linearized_index(docs, pipe_cfg.embedder) if eval_cfg.baseline else None
    naive_k = eval_cfg.k_dense + eval_cfg.k_table

    rows_fused: list[tuple[str, float, float]] = []
    rows_reranked: list[tuple[str, float, float]] = []
    rows_naive: list[tuple[str, float, float]] = []
    elapsed: list[float] = []

    for query in queries:
        gold = set(query.gold_doc_ids)
        t0 = time.perf_counter()
        fused = search_pipeline(
            query.text, built.dense, built.cells, pipe_cfg.embedder, search_cfg, pipe_cfg.router
        )
        if timings:
            elapsed.append((time.perf_counter() - t0) * 1000.0)
        ranking = doc_ranking(fused)
        rows_fused.append(
            (query.qtype, ndcg_at_k(ranking, gold, eval_cfg.ndcg_k), recall_at_k(ranking, gold, eval_cfg.recall_k))
        )
        if eval_cfg.rerank:
            reranked = search_pipeline(
                query.text,
                built.dense,
                built.cells,
                pipe_cfg.embedder,
                search_cfg,
                pipe_cfg.router,
                scorer=scorer,
                texts=texts,
            )
            ranking = doc_ranking(reranked)
            rows_reranked.append(
                (query.qtype, ndcg_at_k(ranking, gold, eval_cfg.ndcg_k), recall_at_k(ranking, gold, eval_cfg.recall_k))
            )
        if naive is not None:
            hits = search_dense(naive, embed_text(query.text, pipe_cfg.embedder), naive_k)
            ranking = []
            seen: set[str] = set()
            for ref, _ in hits:
                doc = ref.split("#", 1)[0]
                if doc not in seen:
                    seen.add(doc)
                    ranking.append(doc)
            rows_naive.append(
                (query.qtype, ndcg_at_k(ranking, gold, eval_cfg.ndcg_k), recall_at_k(ranking, gold, eval_cfg.recall_k))
            )

    systems = [{"system": "dual-fused", **_aggregate(rows_fused, eval_cfg.ndcg_k, eval_cfg.recall_k)}]
    if eval_cfg.rerank:
        systems.append({"system": "dual-reranked", **_aggregate(rows_reranked, eval_cfg.ndcg_k, eval_cfg.recall_k)})
    if naive is not None:
        systems.append({"system": "naive-linearized", **_aggregate(rows_naive, eval_cfg.ndcg_k, eval_cfg.recall_k)})

    latency = None
    if timings and elapsed:
        arr = np.asarray(elapsed)
        latency = {"p50": float(np.percentile(arr, 50)), "p95": float(np.percentile(arr, 95)), "n": len(elapsed)}
    return {
        "config": {
            "k_dense": eval_cfg.k_dense,
            "k_table": eval_cfg.k_table,
            "ndcg_k": eval_cfg.ndcg_k,
            "recall_k": eval_cfg.recall_k,
            "rerank": eval_cfg.rerank,
            "baseline": eval_cfg.baseline,
        },
        "systems": systems,
        "index_bytes": index_bytes,
        "latency_ms": latency,
    }


def report_csv(report: dict) -> str:
    """Flat CSV: one row per (system, query type) plus an ALL row per system."""
    ndcg_k = report["config"]["ndcg_k"]
    recall_k = report["config"]["recall_k"]
    lines = [f"system,query_type,ndcg_at_{ndcg_k},recall_at_{recall_k},n_queries"]
    for system in report["systems"]:
        for qtype, row in system["per_type"].items():
            lines.append(
                f"{system['system']},{qtype},{row[f'ndcg_at_{ndcg_k}']:.6f},"
                f"{row[f'recall_at_{recall_k}']:.6f},{row['n_queries']}"
            )
        overall = system["overall"]
        lines.append(
            f"{system['system']},ALL,{overall[f'ndcg_at_{ndcg_k}']:.6f},"
            f"{overall[f'recall_at_{recall_k}']:.6f},{overall['n_queries']}"
        )
    return "\n".join(lines) + "\n"
