"""Width-sweep robustness experiment: single-vector flattening vs cell vectors.

The table family is inventory-style: every row carries a globally unique lot
code, and each query asks for one lot's price. That key appears exactly once
inside a table, so in the flattened Markdown embedding its contribution
shrinks as noise columns are padded on (shared value pools keep all tables
looking alike), while its cell vector is untouched by table width. Recall@10
for the flat baseline should therefore fall with width and the cell-level
path should stay roughly flat.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..cell_index import build_cell_index, search_tables
from ..dense_index import dense_index_from_pairs, search_dense
from ..embedder import EmbedderConfig, embed_query_tokens, embed_text
from ..errors import GenerationError
from ..model import Table
from .generator import (
    BRIX_POOL,
    DISCOUNT_POOL,
    GRADES,
    MOISTURE_POOL,
    ORIGINS,
    PRICE_POOL,
    SIZES,
    VARIETIES,
)
from .harness import linearize_markdown
from .metrics import recall_at_k

DILUTION_BASE = ("Lot", "Variety", "Price/Kg")
DILUTION_EXTRAS = ("Discount", "Size", "Volume", "Origin", "Grade", "Brix", "Moisture")

VOLUME_VALUES = ("1200", "2400", "3600")
NOISE_POOLS = (PRICE_POOL, DISCOUNT_POOL, SIZES, VOLUME_VALUES, ORIGINS, GRADES, BRIX_POOL, MOISTURE_POOL)


def _dilution_headers(width: int) -> tuple[str, ...]:
    if width < len(DILUTION_BASE):
        raise GenerationError(f"dilution width must be >= {len(DILUTION_BASE)}, got {width}")
    headers = list(DILUTION_BASE)
    headers.extend(DILUTION_EXTRAS[: max(0, width - len(headers))])
    attr = 1
    while len(headers) < width:
        headers.append(f"Attr{attr:02d}")
        attr += 1
    return tuple(headers)


_CODE_ALPHABET = "ABCDEFGHJKMNPQRSTUVWXYZ23456789"


def _reference_pool(rng: random.Random, size: int = 128) -> tuple[str, ...]:
    """Inventory-feed reference codes for the padding columns.

    Long mixed codes carry many character n-grams apiece, so a handful of
    columns of them is enough to crowd the hash buckets of a flattened table
    vector; the pool stays small so the cell index still dedups well.
    """
    pool = []
    for _ in range(size):
        segs = ("".join(rng.choice(_CODE_ALPHABET) for _ in range(4)) for _ in range(3))
        pool.append("REF-" + "-".join(segs))
    return tuple(pool)


def _dilution_value(rng: random.Random, header: str, ref_pool: tuple[str, ...]) -> str:
    if header == "Price/Kg":
        return rng.choice(PRICE_POOL)
    if header == "Discount":
        return rng.choice(DISCOUNT_POOL)
    if header == "Size":
        return rng.choice(SIZES)
    if header == "Volume":
        return rng.choice(VOLUME_VALUES)
    if header == "Origin":
        return rng.choice(ORIGINS)
    if header == "Grade":
        return rng.choice(GRADES)
    if header == "Brix":
        return rng.choice(BRIX_POOL)
    if header == "Moisture":
        return rng.choice(MOISTURE_POOL)
    return rng.choice(ref_pool)


@dataclass(frozen=True)
class DilutionRow:
    width: int
    system: str
    recall_at_10: float
    n_queries: int


def run_dilution_experiment(
    widths: Sequence[int],
    n_tables: int = 40,
    n_queries: int = 40,
    seed: int = 0,
    rows: int = 12,
    emb_cfg: EmbedderConfig = EmbedderConfig(),
) -> list[DilutionRow]:
    """Recall@10 per width for the flat baseline and the cell-level path.

    Widths must be ascending. Each width gets its own table family; every
    query targets the price cell of one row, named by its unique lot code.
    """
    if list(widths) != sorted(widths):
        raise GenerationError("widths must be sorted ascending")
    embed: Callable[[str], np.ndarray] = lambda text: embed_text(text, emb_cfg)
    out: list[DilutionRow] = []
    for width in widths:
        rng = random.Random(seed * 100003 + width)
        headers = _dilution_headers(width)
        price_col = headers.index("Price/Kg")
        ref_pool = _reference_pool(rng)
        tables: list[tuple[str, Table]] = []
        lots: list[list[str]] = []
        for t in range(n_tables):
            table_lots = [f"LT{t:02d}{r:02d}" for r in range(rows)]
            grid = []
            for r in range(rows):
                row = [table_lots[r], rng.choice(VARIETIES)]
                row.extend(_dilution_value(rng, h, ref_pool) for h in headers[2:])
                grid.append(tuple(row))
            tables.append((f"w{width:02d}-t{t:02d}", Table(headers=headers, rows=tuple(grid))))
            lots.append(table_lots)

        queries: list[tuple[str, str, int, int]] = []
        for qi in range(n_queries):
            t = qi % n_tables
            row = rng.randrange(rows)
            queries.append((f"{lots[t][row]} price", tables[t][0], row, price_col))

        baseline = dense_index_from_pairs(
            [(tid, embed(linearize_markdown(table))) for tid, table in tables], dim=emb_cfg.dim
        )
        cells = build_cell_index(tables, embed, dim=emb_cfg.dim, pq_m=emb_cfg.dim // 2)

        base_hits = 0.0
        cell_hits = 0.0
        for text, tid, _, _ in queries:
            base_rank = [ref for ref, _ in search_dense(baseline, embed(text), 10)]
            base_hits += recall_at_k(base_rank, {tid}, 10)
            qvecs = [vec for _, vec in embed_query_tokens(text, emb_cfg)]
            cell_rank = [ref for ref, _ in search_tables(cells, qvecs, 10, mode="exact")]
            cell_hits += recall_at_k(cell_rank, {tid}, 10)
        out.append(DilutionRow(width=width, system="single-vector", recall_at_10=base_hits / n_queries, n_queries=n_queries))
        out.append(DilutionRow(width=width, system="cell-aware", recall_at_10=cell_hits / n_queries, n_queries=n_queries))
    return out


def dilution_csv(rows: Sequence[DilutionRow]) -> str:
    lines = ["width,system,recall_at_10,n_queries"]
    lines.extend(f"{r.width},{r.system},{r.recall_at_10:.6f},{r.n_queries}" for r in rows)
    return "\n".join(lines) + "\n"
