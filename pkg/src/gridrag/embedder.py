"""Deterministic text featurizer and the TOPOEMB1 embedding file format.

The built-in featurizer hashes lowercased word unigrams and character
trigrams into d signed buckets and L2-normalizes the result, so equal text
always yields the identical unit vector and token overlap shows up as a
positive dot product. Production encoders plug in through TOPOEMB1 files
produced by the export bridge; vectors are checked/renormalized on load so
downstream scorers can rely on unit norm unconditionally.

TOPOEMB1 layout (all integers little-endian):
    magic  8 bytes  b"TOPOEMB1"
    dim    u32
    count  u64
    then per record: u16 id byte-length, id UTF-8 bytes, dim x float32
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from functools import lru_cache
from hashlib import blake2b
from pathlib import Path

import numpy as np

from .errors import EmbeddingFileError
from .router import TokenClass, tokenize

MAGIC = b"TOPOEMB1"

_WORD_RE = re.compile(r"\w+")
_NORM_TOL = 1e-6


@dataclass(frozen=True)
class EmbedderConfig:
    dim: int = 256
    char_ngram: tuple[int, ...] = (3,)
    hash_seed: int = 9601

    def __post_init__(self):
        if self.dim < 8:
            raise ValueError(f"dim must be >= 8, got {self.dim}")
        object.__setattr__(self, "char_ngram", tuple(self.char_ngram))


def unit_basis(dim: int) -> np.ndarray:
    e0 = np.zeros(dim, dtype=np.float32)
    e0[0] = 1.0
    return e0


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    """Unit-normalize, mapping (near-)zero vectors to the fixed basis e0."""
    v = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        return unit_basis(v.shape[0])
    return (v / norm).astype(np.float32)


def normalize_if_needed(vec: np.ndarray, tol: float = _NORM_TOL) -> np.ndarray:
    """Return vec untouched when already unit within tol, else renormalize.

    Keeps already-normalized float32 vectors bit-exact, which matters for
    byte-reproducible stores and deterministic tie-breaking.
    """
    v = np.asarray(vec, dtype=np.float32)
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if abs(norm - 1.0) <= tol:
        return v
    return l2_normalize(v)


@lru_cache(maxsize=1 << 20)
def _feature_slot(seed: int, dim: int, feature: str) -> tuple[int, float]:
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = blake2b(feature.encode("utf-8"), digest_size=8, key=key).digest()
    value = int.from_bytes(digest, "little")
    return (value >> 1) % dim, 1.0 if value & 1 else -1.0


@lru_cache(maxsize=1 << 14)
def embed_text(text: str, cfg: EmbedderConfig = EmbedderConfig()) -> np.ndarray:
    """Hashed bag of word unigrams + character n-grams, unit-normalized.

    Deterministic for a given (text, cfg); empty or feature-free input maps
    to the basis vector e0. The returned array is read-only (cached).
    """
    acc = np.zeros(cfg.dim, dtype=np.float64)
    low = text.lower()
    for word in _WORD_RE.findall(low):
        slot, sign = _feature_slot(cfg.hash_seed, cfg.dim, "w=" + word)
        acc[slot] += sign
    for n in cfg.char_ngram:
        for i in range(len(low) - n + 1):
            slot, sign = _feature_slot(cfg.hash_seed, cfg.dim, f"{n}=" + low[i : i + n])
            acc[slot] += sign
    out = l2_normalize(acc)
    out.setflags(write=False)
    return out


def embed_query_tokens(query: str, cfg: EmbedderConfig = EmbedderConfig()) -> list[tuple[str, np.ndarray]]:
    """One embedding per whitespace token, separators dropped."""
    return [
        (tok.text, embed_text(tok.text, cfg))
        for tok in tokenize(query)
        if tok.cls is not TokenClass.SEPARATOR
    ]


def write_embeddings_file(path: str | Path, dim: int, records: list[tuple[str, np.ndarray]]) -> None:
    """Write a TOPOEMB1 file. Record order is preserved; duplicate ids rejected."""
    seen: set[str] = set()
    body = bytearray()
    for rec_id, vec in records:
        if rec_id in seen:
            raise EmbeddingFileError(f"duplicate embedding id {rec_id!r}")
        seen.add(rec_id)
        raw = rec_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise EmbeddingFileError(f"embedding id longer than 65535 bytes: {rec_id[:40]!r}...")
        arr = np.asarray(vec, dtype="<f4")
        if arr.shape != (dim,):
            raise EmbeddingFileError(f"record {rec_id!r}: vector shape {arr.shape} != ({dim},)")
        body += struct.pack("<H", len(raw))
        body += raw
        body += arr.tobytes()
    header = MAGIC + struct.pack("<I", dim) + struct.pack("<Q", len(records))
    Path(path).write_bytes(header + bytes(body))


def read_embeddings_file(path: str | Path, expected_dim: int | None = None) -> dict[str, np.ndarray]:
    """Load a TOPOEMB1 file as an ordered id -> unit vector map.

    Vectors already unit-norm within 1e-6 pass through bit-exactly; anything
    else is renormalized (zero vectors map to e0). Errors on bad magic,
    truncation, duplicate ids, and dim mismatch against expected_dim.
    """
    data = Path(path).read_bytes()
    name = Path(path).name
    if len(data) < len(MAGIC) + 12:
        raise EmbeddingFileError(f"{name}: file too short for TOPOEMB1 header")
    if data[: len(MAGIC)] != MAGIC:
        raise EmbeddingFileError(f"{name}: bad magic, not a TOPOEMB1 file")
    offset = len(MAGIC)
    (dim,) = struct.unpack_from("<I", data, offset)
    offset += 4
    (count,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    if expected_dim is not None and dim != expected_dim:
        raise EmbeddingFileError(f"{name}: dim {dim} does not match expected {expected_dim}")
    vec_bytes = dim * 4
    out: dict[str, np.ndarray] = {}
    for i in range(count):
        if offset + 2 > len(data):
            raise EmbeddingFileError(f"{name}: truncated record {i} (missing id length)")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise EmbeddingFileError(f"{name}: truncated record {i}")
        rec_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float32)
        offset += vec_bytes
        if rec_id in out:
            raise EmbeddingFileError(f"{name}: duplicate id {rec_id!r} at record {i}")
        norm = float(np.linalg.norm(vec.astype(np.float64)))
        if abs(norm - 1.0) > _NORM_TOL:
            vec = l2_normalize(vec)
        vec.setflags(write=False)
        out[rec_id] = vec
    if offset != len(data):
        raise EmbeddingFileError(f"{name}: {len(data) - offset} trailing bytes after last record")
    return out


class ExternalEmbedder:
    """Embedding lookup backed by a TOPOEMB1 file keyed by exact input text.

    Strict by design: a missing text is an error rather than a silent
    fallback to the built-in featurizer, so an index is never built from a
    mix of encoders.
    """

    def __init__(self, table: dict[str, np.ndarray], dim: int, source: str = "<external>"):
        self.table = table
        self.dim = dim
        self.source = source

    @classmethod
    def load(cls, path: str | Path, expected_dim: int | None = None) -> "ExternalEmbedder":
        table = read_embeddings_file(path, expected_dim=expected_dim)
        if expected_dim is None:
            data = Path(path).read_bytes()
            (expected_dim,) = struct.unpack_from("<I", data, len(MAGIC))
        return cls(table, dim=int(expected_dim), source=str(path))

    def __call__(self, text: str) -> np.ndarray:
        try:
            return self.table[text]
        except KeyError:
            raise EmbeddingFileError(
                f"{self.source}: no embedding for text {text[:60]!r}"
            ) from None
