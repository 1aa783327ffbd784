"""Rank-quality metrics with binary relevance."""

from __future__ import annotations

import math
from typing import Sequence


def ndcg_at_k(ranking: Sequence[str], gold: set[str] | frozenset[str], k: int) -> float:
    """Binary-gain nDCG: DCG uses 1/log2(i+1) at 1-based rank i, IDCG places
    min(|gold|, k) hits at the top. 0 when nothing relevant is ranked."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gold = set(gold)
    dcg = sum(1.0 / math.log2(i + 1) for i, ref in enumerate(ranking[:k], start=1) if ref in gold)
    ideal = sum(1.0 / math.log2(i + 1) for i in range(1, min(len(gold), k) + 1))
    if ideal == 0.0:
        return 0.0
    return dcg / ideal


def recall_at_k(ranking: Sequence[str], gold: set[str] | frozenset[str], k: int) -> float:
    """Fraction of gold items present in the top k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    gold = set(gold)
    if not gold:
        raise ValueError("recall is undefined for an empty gold set")
    return len(set(ranking[:k]) & gold) / len(gold)
