"""Single-vector store for narrative spans with exact cosine top-k search.

Exact scan instead of approximate search: at desk scale (<= 1e5 entries)
brute force is fast, and exactness keeps every downstream ranking test
deterministic. The index is frozen after build; concurrent reads are safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DataError
from .router import RoutedBlock


@dataclass
class DenseIndex:
    refs: list[str]
    matrix: np.ndarray  # (n, dim) float32, unit rows
    dim: int

    def __len__(self) -> int:
        return len(self.refs)


def dense_index_from_pairs(pairs: Sequence[tuple[str, np.ndarray]], dim: int) -> DenseIndex:
    refs: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    for ref, vec in pairs:
        if ref in seen:
            raise DataError(f"duplicate block ref {ref!r} in dense index")
        seen.add(ref)
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (dim,):
            raise DataError(f"dense entry {ref!r}: vector shape {arr.shape} != ({dim},)")
        refs.append(ref)
        rows.append(arr)
    matrix = np.stack(rows).astype(np.float32) if rows else np.zeros((0, dim), dtype=np.float32)
    return DenseIndex(refs=refs, matrix=matrix, dim=dim)


def build_dense_index(
    blocks: Sequence[RoutedBlock],
    embed: Callable[[str], np.ndarray],
    dim: int,
) -> DenseIndex:
    """One entry per narrative block, in the order supplied (doc order, then block order)."""
    return dense_index_from_pairs([(b.ref, embed(b.text)) for b in blocks], dim=dim)


def search_dense(index: DenseIndex, query: np.ndarray, k: int) -> list[tuple[str, float]]:
    """Top-k entries by dot product (cosine for unit vectors), descending.

    Ties break by ref ascending so rankings are reproducible. Returns fewer
    than k results when the index is smaller.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (index.dim,):
        raise DataError(f"query dim {q.shape} does not match index dim {index.dim}")
    if len(index) == 0:
        return []
    scores = index.matrix.astype(np.float64) @ q
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.refs[i]))
    return [(index.refs[i], float(scores[i])) for i in order[:k]]
