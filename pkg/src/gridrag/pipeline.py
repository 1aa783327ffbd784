"""End-to-end wiring: corpus -> routed blocks -> dual index -> fused search.

Refs encode provenance so rankings can be reduced to document ids:
    narrative span   doc#b<block>[:w<start>-<end>]
    table            doc#t<block>
    structured text  doc#b<block>:w<start>-<end>  (token-bag entry in the cell index)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cell_index import (
    CellIndex,
    DEFAULT_PQ_M,
    DEFAULT_STOPWORDS,
    build_cell_index,
    search_tables,
    serialize_table,
)
from .dense_index import DenseIndex, build_dense_index, search_dense
from .embedder import EmbedderConfig, embed_text
from .fusion import Candidate, CrossScorer, fuse_candidates, rerank
from .model import Document
from .router import (
    ROUTE_NARRATIVE,
    ROUTE_STRUCTURED,
    RouterConfig,
    RoutedBlock,
    TokenClass,
    segment,
    sds,
    tokenize,
)

ROUTE_CHOICES = ("auto", "text", "table", "both")


@dataclass(frozen=True)
class PipelineConfig:
    router: RouterConfig = field(default_factory=RouterConfig)
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    pq_m: int = DEFAULT_PQ_M
    pq_k: int = 16
    pq_seed: int = 7
    pq_iters: int = 25
    stopwords: frozenset[str] = DEFAULT_STOPWORDS


@dataclass
class BuiltIndex:
    dense: DenseIndex
    cells: CellIndex
    narrative_blocks: int
    tables: int


def featurizer(cfg: EmbedderConfig) -> Callable[[str], np.ndarray]:
    return lambda text: embed_text(text, cfg)


def _bag_tokens(text: str) -> list[str]:
    return [t.text for t in tokenize(text) if t.cls is not TokenClass.SEPARATOR]


def route_document_set(docs: Sequence[Document], cfg: RouterConfig) -> list[RoutedBlock]:
    routed: list[RoutedBlock] = []
    for doc in docs:
        routed.extend(segment(doc, cfg))
    return routed


def build_indexes(
    docs: Sequence[Document],
    cfg: PipelineConfig = PipelineConfig(),
    embed: Callable[[str], np.ndarray] | None = None,
) -> BuiltIndex:
    """Route every block and build both indexes.

    Narrative spans go to the dense index. Table blocks go to the cell index;
    text spans the router flagged as structured join it as token bags (each
    surviving token one vector), since they carry structure but no grid.
    """
    if embed is None:
        embed = featurizer(cfg.embedder)
    routed = route_document_set(docs, cfg.router)
    narrative = [rb for rb in routed if rb.route == ROUTE_NARRATIVE]
    dense = build_dense_index(narrative, embed, dim=cfg.embedder.dim)

    doc_by_id = {d.id: d for d in docs}
    tables = []
    token_bags = []
    for rb in routed:
        if rb.route != ROUTE_STRUCTURED:
            continue
        if rb.is_table:
            table = doc_by_id[rb.doc_id].blocks[rb.block_index].table
            assert table is not None
            tables.append((rb.ref, table))
        else:
            token_bags.append((rb.ref, _bag_tokens(rb.text)))
    cells = build_cell_index(
        tables,
        embed,
        dim=cfg.embedder.dim,
        stopwords=cfg.stopwords,
        pq_m=cfg.pq_m,
        pq_k=cfg.pq_k,
        pq_seed=cfg.pq_seed,
        pq_iters=cfg.pq_iters,
        token_bags=token_bags,
    )
    return BuiltIndex(dense=dense, cells=cells, narrative_blocks=len(narrative), tables=len(cells.tables))


def doc_of_ref(ref: str) -> str:
    return ref.split("#", 1)[0]


def doc_ranking(candidates: Sequence[Candidate]) -> list[str]:
    """Collapse a candidate ranking to unique document ids, best rank first."""
    seen: set[str] = set()
    docs: list[str] = []
    for cand in candidates:
        doc = doc_of_ref(cand.ref)
        if doc not in seen:
            seen.add(doc)
            docs.append(doc)
    return docs


def materialize_texts(docs: Sequence[Document], cfg: PipelineConfig) -> dict[str, str]:
    """Ref -> candidate text for the cross-scorer.

    Narrative and structured text spans keep their window text; tables are
    serialized cell by cell so header hits stay visible to the scorer.
    """
    texts: dict[str, str] = {}
    doc_by_id = {d.id: d for d in docs}
    for rb in route_document_set(docs, cfg.router):
        if rb.is_table:
            table = doc_by_id[rb.doc_id].blocks[rb.block_index].table
            assert table is not None
            texts[rb.ref] = serialize_table(table, rb.ref)
        else:
            texts[rb.ref] = rb.text
    return texts


def query_route(query_text: str, route: str, router_cfg: RouterConfig) -> tuple[bool, bool]:
    """(use dense, use tables) for a query under a route policy.

    "auto" applies the structural-density rule to the query itself: an
    entity/number-heavy query goes to the table path, prose to the dense path.
    """
    if route == "both":
        return True, True
    if route == "text":
        return True, False
    if route == "table":
        return False, True
    if route == "auto":
        structured = sds(tokenize(query_text)) > router_cfg.tau
        return (not structured, structured)
    raise ValueError(f"unknown route {route!r}, expected one of {ROUTE_CHOICES}")


@dataclass(frozen=True)
class SearchConfig:
    k_dense: int = 20
    k_table: int = 20
    final_k: int = 20
    route: str = "both"
    mode: str = "exact"  # cell index scoring: exact | pq


def search_pipeline(
    query_text: str,
    dense: DenseIndex,
    cells: CellIndex,
    emb_cfg: EmbedderConfig,
    search_cfg: SearchConfig = SearchConfig(),
    router_cfg: RouterConfig = RouterConfig(),
    *,
    scorer: CrossScorer | None = None,
    texts: dict[str, str] | None = None,
    embed: Callable[[str], np.ndarray] | None = None,
) -> list[Candidate]:
    """Dual-path retrieval for one query, optionally reranked.

    Without a scorer the fused min-max order is the final order. With a
    scorer (and materialized texts) fusion only selects candidates and the
    scorer decides the final ranking.
    """
    if embed is None:
        embed = featurizer(emb_cfg)
    use_dense, use_tables = query_route(query_text, search_cfg.route, router_cfg)
    dense_hits: list[tuple[str, float]] = []
    table_hits: list[tuple[str, float]] = []
    if use_dense and len(dense) > 0:
        dense_hits = search_dense(dense, embed(query_text), search_cfg.k_dense)
    if use_tables and cells.tables:
        # one encoder serves both paths, including any external substitute
        qvecs = [embed(token) for token in _bag_tokens(query_text)]
        table_hits = search_tables(cells, qvecs, search_cfg.k_table, mode=search_cfg.mode)
    candidates = fuse_candidates(dense_hits, table_hits)
    if scorer is not None:
        texts = texts or {}
        candidates = [
            Candidate(ref=c.ref, route=c.route, raw_score=c.raw_score, norm_score=c.norm_score, text=texts.get(c.ref, ""))
            for c in candidates
        ]
        return rerank(query_text, candidates, scorer, search_cfg.final_k)
    return candidates[: search_cfg.final_k]
