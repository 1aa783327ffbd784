"""Persist and reload the dual index with integrity checks.

Directory layout:
    manifest.json  format version, dims, router/pq/embedder config, counts,
                   corpus checksum
    dense.vec      TOPOEMB1 file keyed by block ref
    cells.meta     JSON: per-table centroid refs, multiplicities, provenance
    codebook.bin   magic "TOPOPQ1\\0", u32 d, u32 m, u32 k, u32 seed,
                   then m*k*(d/m) float32 LE centroids
    codes.bin      u64 count, then m/2 bytes of packed nibbles per centroid,
                   low nibble first

All integers little-endian, all floats IEEE-754 binary32; saving the same
logical index twice produces byte-identical files. Only the 4-bit codes are
persisted for cell vectors, so a loaded index reconstructs its centroid
vectors from the codebook (exact whenever quantization was exact).
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .cell_index import CellIndex, CellIndexStats, CellVector, PQCodebook
from .dense_index import DenseIndex, dense_index_from_pairs
from .embedder import normalize_if_needed, read_embeddings_file, write_embeddings_file
from .errors import IndexStoreError

FORMAT_VERSION = "gridrag-index/1"
PQ_MAGIC = b"TOPOPQ1\x00"

MANIFEST = "manifest.json"
DENSE_VEC = "dense.vec"
CELLS_META = "cells.meta"
CODEBOOK_BIN = "codebook.bin"
CODES_BIN = "codes.bin"

INDEX_FILES = (MANIFEST, DENSE_VEC, CELLS_META, CODEBOOK_BIN, CODES_BIN)


@dataclass
class Manifest:
    format_version: str
    dim: int
    tau: float
    window_tokens: int
    stride_tokens: int
    pq: dict  # {"m", "k", "seed", "iters"}
    embedder: dict  # {"char_ngram", "hash_seed"}
    counts: dict  # narrative_blocks, tables, cells_before_prune, cells_after_prune, centroids
    corpus_sha256: str
    created_at: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def default_created_at() -> str:
    """Deterministic timestamp: honors SOURCE_DATE_EPOCH, else a fixed epoch.

    Wall-clock stamps would break byte-reproducible saves.
    """
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    import datetime

    return datetime.datetime.fromtimestamp(epoch, tz=datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def corpus_checksum(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _pack_codes(codes: np.ndarray) -> bytes:
    n, m = codes.shape
    if m % 2 != 0:
        raise IndexStoreError(f"code width m={m} must be even for nibble packing")
    out = bytearray()
    out += struct.pack("<Q", n)
    for row in codes:
        for i in range(0, m, 2):
            out.append(int(row[i]) & 0x0F | (int(row[i + 1]) & 0x0F) << 4)
    return bytes(out)


def _unpack_codes(data: bytes, m: int, expected: int) -> np.ndarray:
    if len(data) < 8:
        raise IndexStoreError(f"{CODES_BIN}: missing count header")
    (n,) = struct.unpack_from("<Q", data, 0)
    if n != expected:
        raise IndexStoreError(f"{CODES_BIN}: count header {n} does not match manifest centroids {expected}")
    per = m // 2
    if len(data) != 8 + n * per:
        raise IndexStoreError(f"{CODES_BIN}: expected {8 + n * per} bytes, found {len(data)}")
    codes = np.zeros((n, m), dtype=np.uint8)
    off = 8
    for r in range(n):
        for i in range(per):
            byte = data[off]
            codes[r, 2 * i] = byte & 0x0F
            codes[r, 2 * i + 1] = byte >> 4
            off += 1
    return codes


def _write_codebook(path: Path, cb: PQCodebook, dim: int) -> None:
    header = PQ_MAGIC + struct.pack("<IIII", dim, cb.m, cb.k, cb.seed & 0xFFFFFFFF)
    path.write_bytes(header + cb.centroids.astype("<f4").tobytes())


def _read_codebook(path: Path, dim: int, m: int, k: int) -> PQCodebook:
    data = path.read_bytes()
    if len(data) < len(PQ_MAGIC) + 16:
        raise IndexStoreError(f"{CODEBOOK_BIN}: file too short")
    if data[: len(PQ_MAGIC)] != PQ_MAGIC:
        raise IndexStoreError(f"{CODEBOOK_BIN}: bad magic")
    d, fm, fk, seed = struct.unpack_from("<IIII", data, len(PQ_MAGIC))
    if (d, fm, fk) != (dim, m, k):
        raise IndexStoreError(
            f"{CODEBOOK_BIN}: header (d={d}, m={fm}, k={fk}) does not match manifest (d={dim}, m={m}, k={k})"
        )
    sub = dim // m
    expected = len(PQ_MAGIC) + 16 + m * k * sub * 4
    if len(data) != expected:
        raise IndexStoreError(f"{CODEBOOK_BIN}: expected {expected} bytes, found {len(data)}")
    cents = np.frombuffer(data, dtype="<f4", offset=len(PQ_MAGIC) + 16).reshape(m, k, sub).copy()
    return PQCodebook(m=m, k=k, centroids=cents, seed=int(seed))


def _cells_meta_obj(cells: CellIndex) -> dict:
    return {
        "dim": cells.dim,
        "stats": {
            "cells_before_prune": cells.stats.cells_before_prune,
            "cells_after_prune": cells.stats.cells_after_prune,
            "centroids": cells.stats.centroids,
        },
        "centroids": [
            {
                "ref": list(cv.cell_ref),
                "multiplicity": cv.multiplicity,
                "members": [list(m) for m in cv.members],
            }
            for cv in cells.centroids
        ],
        "tables": {tid: idxs for tid, idxs in cells.tables.items()},
    }


def save_index(directory: str | Path, dense: DenseIndex, cells: CellIndex, manifest: Manifest) -> None:
    """Write all index files; refuses a directory holding a foreign index version."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    existing = directory / MANIFEST
    if existing.exists():
        try:
            version = json.loads(existing.read_text()).get("format_version")
        except (OSError, json.JSONDecodeError):
            version = None
        if version is not None and version != FORMAT_VERSION:
            raise IndexStoreError(
                f"{directory} holds an index with version {version!r}, expected {FORMAT_VERSION!r}"
            )
    if cells.codebook is None and cells.centroids:
        raise IndexStoreError("cell index has centroids but no codebook")

    write_embeddings_file(directory / DENSE_VEC, dense.dim, list(zip(dense.refs, dense.matrix)))
    meta_json = json.dumps(_cells_meta_obj(cells), ensure_ascii=False, separators=(",", ":")) + "\n"
    (directory / CELLS_META).write_text(meta_json, encoding="utf-8")
    if cells.codebook is not None:
        _write_codebook(directory / CODEBOOK_BIN, cells.codebook, cells.dim)
    else:
        empty = PQCodebook(
            m=manifest.pq["m"],
            k=manifest.pq["k"],
            centroids=np.zeros((manifest.pq["m"], manifest.pq["k"], cells.dim // manifest.pq["m"]), dtype=np.float32),
            seed=manifest.pq["seed"],
        )
        _write_codebook(directory / CODEBOOK_BIN, empty, cells.dim)
    (directory / CODES_BIN).write_bytes(_pack_codes(cells.codes))
    (directory / MANIFEST).write_text(manifest.to_json(), encoding="utf-8")


def load_index(directory: str | Path) -> tuple[DenseIndex, CellIndex, Manifest]:
    """Reload an index directory, re-validating every structural invariant.

    Centroid vectors are reconstructed from the 4-bit codes (then unit
    normalized), matching what search would use in pq mode.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST
    if not manifest_path.exists():
        raise IndexStoreError(f"{directory} is not an index directory (no {MANIFEST})")
    try:
        raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IndexStoreError(f"{MANIFEST}: malformed JSON ({exc.msg})") from exc
    if raw.get("format_version") != FORMAT_VERSION:
        raise IndexStoreError(
            f"{MANIFEST}: unrecognized format_version {raw.get('format_version')!r}"
        )
    try:
        manifest = Manifest(**raw)
    except TypeError as exc:
        raise IndexStoreError(f"{MANIFEST}: missing or unexpected fields ({exc})") from exc

    table = read_embeddings_file(directory / DENSE_VEC, expected_dim=manifest.dim)
    dense = dense_index_from_pairs(list(table.items()), dim=manifest.dim)
    if len(dense) != manifest.counts["narrative_blocks"]:
        raise IndexStoreError(
            f"{DENSE_VEC}: {len(dense)} entries, manifest says {manifest.counts['narrative_blocks']}"
        )

    try:
        meta = json.loads((directory / CELLS_META).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IndexStoreError(f"{CELLS_META}: malformed JSON ({exc.msg})") from exc
    if meta.get("dim") != manifest.dim:
        raise IndexStoreError(f"{CELLS_META}: dim {meta.get('dim')} does not match manifest {manifest.dim}")
    n_centroids = len(meta.get("centroids", []))
    if n_centroids != manifest.counts["centroids"]:
        raise IndexStoreError(
            f"{CELLS_META}: {n_centroids} centroids, manifest says {manifest.counts['centroids']}"
        )

    m, k = manifest.pq["m"], manifest.pq["k"]
    codebook = _read_codebook(directory / CODEBOOK_BIN, manifest.dim, m, k)
    codes = _unpack_codes((directory / CODES_BIN).read_bytes(), m, n_centroids)
    if codes.size and codes.max() >= k:
        raise IndexStoreError(f"{CODES_BIN}: code value out of range [0, {k})")

    from .cell_index import decode_pq

    decoded = decode_pq(codebook, codes) if n_centroids else np.zeros((0, manifest.dim), dtype=np.float32)
    centroids: list[CellVector] = []
    total_mult = 0
    for i, entry in enumerate(meta["centroids"]):
        members = tuple(tuple(mm) for mm in entry["members"])
        mult = int(entry["multiplicity"])
        if mult < 1 or mult != len(members):
            raise IndexStoreError(f"{CELLS_META}: centroid {i} multiplicity {mult} != members {len(members)}")
        total_mult += mult
        centroids.append(
            CellVector(
                cell_ref=tuple(entry["ref"]),
                vector=normalize_if_needed(decoded[i]),
                multiplicity=mult,
                members=members,
            )
        )
    stats = CellIndexStats(**meta["stats"])
    if total_mult != stats.cells_after_prune:
        raise IndexStoreError(
            f"{CELLS_META}: multiplicities sum to {total_mult}, stats say {stats.cells_after_prune}"
        )
    if stats.cells_after_prune > stats.cells_before_prune:
        raise IndexStoreError(f"{CELLS_META}: after-prune count exceeds before-prune count")
    if len(meta["tables"]) != manifest.counts["tables"]:
        raise IndexStoreError(
            f"{CELLS_META}: {len(meta['tables'])} tables, manifest says {manifest.counts['tables']}"
        )
    tables: dict[str, list[int]] = {}
    for tid, idxs in meta["tables"].items():
        for ci in idxs:
            if not 0 <= ci < n_centroids:
                raise IndexStoreError(f"{CELLS_META}: table {tid!r} references centroid {ci} out of range")
        tables[tid] = [int(ci) for ci in idxs]

    cells = CellIndex(
        dim=manifest.dim,
        centroids=centroids,
        tables=tables,
        codebook=codebook if n_centroids else None,
        codes=codes,
        stats=stats,
    )
    return dense, cells, manifest


def index_file_sizes(directory: str | Path) -> dict[str, int]:
    directory = Path(directory)
    sizes = {}
    for name in INDEX_FILES:
        path = directory / name
        if path.exists():
            sizes[name] = path.stat().st_size
    sizes["total"] = sum(v for k, v in sizes.items() if k != "total")
    return sizes
