"""Cell-level late interaction over tables: the structural retrieval path.

Each non-empty cell is serialized with its column header injected
("[COL: header] [VAL: value]"), embedded to a unit vector, pruned of empty
and stopword-only values, deduplicated into exact-duplicate centroids with
multiplicity and full provenance, and product-quantized to 4-bit codes.

A table is scored against a tokenized query with MaxSim: for every query
token take the maximum (clamped-at-zero) dot product over the table's cell
vectors, then sum over tokens. The sum grows only with genuine per-token
matches, so a wide table does not dilute the score of the one cell that
answers the query.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .embedder import normalize_if_needed
from .errors import DataError
from .model import Cell, Table, extract_cells

CellRef = tuple[str, int, int]

DEFAULT_STOPWORDS = frozenset(
    {
        "el", "la", "los", "las", "de", "del", "un", "una", "y", "o",
        "the", "a", "an", "and", "or", "of", "to", "in", "on", "at",
        "na", "n/a", "s/n", "none", "null",
    }
)

DEDUP_COSINE = 0.9999


def serialize_cell(cell: Cell) -> str:
    """Positional injection: the cell value prefixed with its column header."""
    assert cell.value.strip(), "empty cells must be pruned before serialization"
    return f"[COL: {cell.header}] [VAL: {cell.value}]"


def serialize_table(table: Table, table_id: str) -> str:
    """All non-empty cells of a table in serialized form, one row per line.

    This is the text a cross-scorer sees for a structural candidate.
    """
    lines = []
    for i, row in enumerate(table.rows):
        parts = [
            serialize_cell(Cell(table_id, i, j, table.headers[j], value))
            for j, value in enumerate(row)
            if value.strip()
        ]
        if parts:
            lines.append(" ".join(parts))
    return "\n".join(lines)


def prune_cells(cells: Iterable[Cell], stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[Cell]:
    """Drop cells that are empty or whose every token is a stopword; order kept."""
    kept = []
    for cell in cells:
        tokens = cell.value.split()
        if not tokens:
            continue
        if all(t.lower() in stopwords for t in tokens):
            continue
        kept.append(cell)
    return kept


@dataclass(frozen=True)
class CellVector:
    cell_ref: CellRef
    vector: np.ndarray  # (dim,) float32, unit norm
    multiplicity: int = 1
    members: tuple[CellRef, ...] = ()

    def __post_init__(self):
        if not self.members:
            object.__setattr__(self, "members", (self.cell_ref,))


def _group_exact(vectors: Sequence[CellVector]) -> list[CellVector]:
    """Collapse bit-identical vectors (first-occurrence order).

    Equivalent to running the greedy cosine merge on them directly: an exact
    copy always first-matches the same survivor its original did.
    """
    order: dict[bytes, int] = {}
    groups: list[list[CellVector]] = []
    for cv in vectors:
        key = cv.vector.tobytes()
        if key in order:
            groups[order[key]].append(cv)
        else:
            order[key] = len(groups)
            groups.append([cv])
    out = []
    for group in groups:
        first = group[0]
        if len(group) == 1:
            out.append(first)
        else:
            members = tuple(ref for cv in group for ref in cv.members)
            out.append(
                CellVector(
                    cell_ref=first.cell_ref,
                    vector=first.vector,
                    multiplicity=sum(cv.multiplicity for cv in group),
                    members=members,
                )
            )
    return out


def dedup_centroids(vectors: Sequence[CellVector], threshold: float = DEDUP_COSINE) -> list[CellVector]:
    """Merge vectors whose cosine to an earlier survivor is >= threshold.

    The survivor is the first occurrence; multiplicities are summed and every
    merged member's cell_ref is kept so provenance is never lost.
    """
    if not vectors:
        return []
    vectors = _group_exact(vectors)
    dim = vectors[0].vector.shape[0]
    capacity = 16
    mat = np.zeros((capacity, dim), dtype=np.float64)
    refs: list[CellRef] = []
    mults: list[int] = []
    members: list[list[CellRef]] = []
    kept_vecs: list[np.ndarray] = []
    for cv in vectors:
        v = cv.vector.astype(np.float64)
        target = -1
        if refs:
            sims = mat[: len(refs)] @ v
            hits = np.nonzero(sims >= threshold)[0]
            if hits.size:
                target = int(hits[0])
        if target >= 0:
            mults[target] += cv.multiplicity
            members[target].extend(cv.members)
        else:
            if len(refs) == capacity:
                capacity *= 2
                grown = np.zeros((capacity, dim), dtype=np.float64)
                grown[: len(refs)] = mat[: len(refs)]
                mat = grown
            mat[len(refs)] = v
            refs.append(cv.cell_ref)
            mults.append(cv.multiplicity)
            members.append(list(cv.members))
            kept_vecs.append(cv.vector)
    return [
        CellVector(cell_ref=refs[i], vector=kept_vecs[i], multiplicity=mults[i], members=tuple(members[i]))
        for i in range(len(refs))
    ]


# ---------------------------------------------------------------------------
# Product quantization: m subspaces, 16 centroids each (4-bit codes)
# ---------------------------------------------------------------------------

# Hashed feature vectors are sparse; narrow subspaces keep per-token matches
# intact after quantization (wider ones collapse ranking margins).
DEFAULT_PQ_M = 128


@dataclass
class PQCodebook:
    m: int
    k: int
    centroids: np.ndarray  # (m, k, dim // m) float32
    seed: int
    iters: int = 25

    @property
    def dim(self) -> int:
        return self.m * self.centroids.shape[2]


def _kmeans_subspace(data: np.ndarray, k: int, rng: np.random.Generator, iters: int) -> np.ndarray:
    """Seeded k-means++ with Lloyd iterations, deterministic for fixed inputs.

    When the data has <= k distinct points the centroids are exactly those
    points (first-occurrence order, padded with the first point), so every
    training point reconstructs without error.
    """
    n = data.shape[0]
    distinct_order: dict[bytes, int] = {}
    for i in range(n):
        distinct_order.setdefault(data[i].tobytes(), i)
    if len(distinct_order) <= k:
        points = [data[i] for i in distinct_order.values()]
        while len(points) < k:
            points.append(points[0])
        return np.stack(points)

    work = data.astype(np.float64)
    centroids = np.empty((k, data.shape[1]), dtype=np.float64)
    centroids[0] = work[rng.integers(n)]
    min_d2 = ((work - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = float(min_d2.sum())
        if total <= 0.0:
            centroids[c] = centroids[0]
            continue
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(min_d2), r, side="right"))
        idx = min(idx, n - 1)
        centroids[c] = work[idx]
        min_d2 = np.minimum(min_d2, ((work - centroids[c]) ** 2).sum(axis=1))

    prev_inertia = np.inf
    for _ in range(iters):
        d2 = ((work[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        for c in range(k):
            mask = labels == c
            if mask.any():
                centroids[c] = work[mask].mean(axis=0)
            else:
                farthest = int(d2[np.arange(n), labels].argmax())
                centroids[c] = work[farthest]
                labels[farthest] = c
        if prev_inertia < np.inf and abs(prev_inertia - inertia) / max(prev_inertia, 1e-12) < 1e-4:
            break
        prev_inertia = inertia
    return centroids.astype(np.float32)


def train_pq(vectors: np.ndarray, m: int = DEFAULT_PQ_M, k: int = 16, seed: int = 7, iters: int = 25) -> PQCodebook:
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise DataError("train_pq needs a non-empty (n, dim) training set")
    dim = vectors.shape[1]
    if dim % m != 0:
        raise DataError(f"dim {dim} is not divisible by m={m}")
    sub = dim // m
    centroids = np.zeros((m, k, sub), dtype=np.float32)
    for j in range(m):
        rng = np.random.default_rng([seed & 0xFFFFFFFF, j])
        centroids[j] = _kmeans_subspace(vectors[:, j * sub : (j + 1) * sub], k, rng, iters)
    return PQCodebook(m=m, k=k, centroids=centroids, seed=seed, iters=iters)


def encode_pq(cb: PQCodebook, vectors: np.ndarray) -> np.ndarray:
    """Nearest centroid per subspace (L2, ties to the lowest index)."""
    vectors = np.asarray(vectors, dtype=np.float32)
    single = vectors.ndim == 1
    if single:
        vectors = vectors[None, :]
    if vectors.shape[1] != cb.dim:
        raise DataError(f"vector dim {vectors.shape[1]} != codebook dim {cb.dim}")
    sub = cb.dim // cb.m
    codes = np.zeros((vectors.shape[0], cb.m), dtype=np.uint8)
    for j in range(cb.m):
        block = vectors[:, j * sub : (j + 1) * sub].astype(np.float64)
        cents = cb.centroids[j].astype(np.float64)
        d2 = ((block[:, None, :] - cents[None, :, :]) ** 2).sum(axis=2)
        codes[:, j] = d2.argmin(axis=1).astype(np.uint8)
    return codes[0] if single else codes


def decode_pq(cb: PQCodebook, codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.uint8)
    single = codes.ndim == 1
    if single:
        codes = codes[None, :]
    if codes.shape[1] != cb.m:
        raise DataError(f"code width {codes.shape[1]} != m={cb.m}")
    sub = cb.dim // cb.m
    out = np.zeros((codes.shape[0], cb.dim), dtype=np.float32)
    for j in range(cb.m):
        out[:, j * sub : (j + 1) * sub] = cb.centroids[j][codes[:, j]]
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Scoring and the built index
# ---------------------------------------------------------------------------


def _as_matrix(vecs) -> np.ndarray:
    if isinstance(vecs, np.ndarray):
        return vecs.astype(np.float64)
    rows = [cv.vector if isinstance(cv, CellVector) else np.asarray(cv) for cv in vecs]
    if not rows:
        return np.zeros((0, 0), dtype=np.float64)
    return np.stack(rows).astype(np.float64)


def maxsim_score(query_vecs, cell_vecs) -> float:
    """Sum over query tokens of the max clamped dot product over cell vectors.

    Negative dots clamp to zero so anti-matches cannot erase good matches and
    the score stays within [0, number of query tokens] for unit vectors.
    Empty query or empty table scores 0.
    """
    q = _as_matrix(query_vecs)
    c = _as_matrix(cell_vecs)
    if q.shape[0] == 0 or c.shape[0] == 0:
        return 0.0
    if q.shape[1] != c.shape[1]:
        raise DataError(f"query dim {q.shape[1]} != cell dim {c.shape[1]}")
    sims = np.clip(q @ c.T, 0.0, None)
    return float(sims.max(axis=1).sum())


@dataclass
class CellIndexStats:
    cells_before_prune: int
    cells_after_prune: int
    centroids: int


@dataclass
class CellIndex:
    dim: int
    centroids: list[CellVector]
    tables: dict[str, list[int]]  # table id -> centroid indices (ascending)
    codebook: PQCodebook | None
    codes: np.ndarray  # (n_centroids, m) uint8
    stats: CellIndexStats
    _exact: np.ndarray | None = field(default=None, repr=False)
    _decoded: np.ndarray | None = field(default=None, repr=False)

    def exact_matrix(self) -> np.ndarray:
        if self._exact is None:
            if self.centroids:
                self._exact = np.stack([cv.vector for cv in self.centroids]).astype(np.float64)
            else:
                self._exact = np.zeros((0, self.dim), dtype=np.float64)
        return self._exact

    def decoded_matrix(self) -> np.ndarray:
        """PQ-reconstructed centroid vectors, renormalized to unit length."""
        if self._decoded is None:
            if self.codebook is None or len(self.centroids) == 0:
                self._decoded = np.zeros((0, self.dim), dtype=np.float64)
            else:
                dec = decode_pq(self.codebook, self.codes)
                self._decoded = np.stack([normalize_if_needed(row) for row in dec]).astype(np.float64)
        return self._decoded


def build_cell_index(
    tables: Sequence[tuple[str, Table]],
    embed: Callable[[str], np.ndarray],
    dim: int,
    *,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
    pq_m: int = DEFAULT_PQ_M,
    pq_k: int = 16,
    pq_seed: int = 7,
    pq_iters: int = 25,
    token_bags: Sequence[tuple[str, Sequence[str]]] = (),
) -> CellIndex:
    """Index tables (and optional token bags from structured text spans).

    Token bags cover text the router classified as structured: each surviving
    token becomes one vector with ref (bag id, 0, position), no header
    injection, subject to the same pruning, dedup, and quantization.
    """
    if dim % pq_m != 0:
        raise DataError(f"embedding dim {dim} is not divisible by pq_m={pq_m}")
    before = 0
    vectors: list[CellVector] = []
    table_ids: list[str] = []
    for table_id, table in tables:
        if table_id in set(table_ids):
            raise DataError(f"duplicate table id {table_id!r}")
        table_ids.append(table_id)
        cells = extract_cells(table, table_id)
        before += len(cells)
        for cell in prune_cells(cells, stopwords):
            vectors.append(CellVector(cell_ref=(table_id, cell.row, cell.col), vector=embed(serialize_cell(cell))))
    for bag_id, tokens in token_bags:
        if bag_id in set(table_ids):
            raise DataError(f"duplicate table id {bag_id!r}")
        table_ids.append(bag_id)
        before += len(tokens)
        for pos, token in enumerate(tokens):
            if not token.strip() or all(t.lower() in stopwords for t in token.split()):
                continue
            vectors.append(CellVector(cell_ref=(bag_id, 0, pos), vector=embed(token)))
    after = len(vectors)

    centroids = dedup_centroids(vectors)
    table_map: dict[str, list[int]] = {tid: [] for tid in table_ids}
    for ci, cv in enumerate(centroids):
        hit: set[str] = set()
        for tid, _, _ in cv.members:
            if tid not in hit:
                table_map[tid].append(ci)
                hit.add(tid)

    if centroids:
        matrix = np.stack([cv.vector for cv in centroids]).astype(np.float32)
        codebook = train_pq(matrix, m=pq_m, k=pq_k, seed=pq_seed, iters=pq_iters)
        codes = encode_pq(codebook, matrix)
    else:
        codebook = None
        codes = np.zeros((0, pq_m), dtype=np.uint8)

    return CellIndex(
        dim=dim,
        centroids=centroids,
        tables=table_map,
        codebook=codebook,
        codes=codes,
        stats=CellIndexStats(cells_before_prune=before, cells_after_prune=after, centroids=len(centroids)),
    )


SEARCH_MODES = ("exact", "pq")


def search_tables(
    index: CellIndex,
    query_vecs,
    k: int,
    mode: str = "exact",
) -> list[tuple[str, float]]:
    """Rank tables by MaxSim, descending; ties break by table id ascending."""
    if mode not in SEARCH_MODES:
        raise ValueError(f"unknown search mode {mode!r}, expected one of {SEARCH_MODES}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = _as_matrix(query_vecs)
    matrix = index.exact_matrix() if mode == "exact" else index.decoded_matrix()
    if q.shape[0] == 0 or matrix.shape[0] == 0:
        scored = [(tid, 0.0) for tid in index.tables]
    else:
        if q.shape[1] != index.dim:
            raise DataError(f"query dim {q.shape[1]} != index dim {index.dim}")
        sims = np.clip(q @ matrix.T, 0.0, None)
        scored = []
        for tid, idxs in index.tables.items():
            if idxs:
                scored.append((tid, float(sims[:, idxs].max(axis=1).sum())))
            else:
                scored.append((tid, 0.0))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]
