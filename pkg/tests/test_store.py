import struct

import numpy as np
import pytest

from gridrag.embedder import EmbedderConfig
from gridrag.errors import DataError, IndexStoreError
from gridrag.evalgen import CorpusSpec, generate_corpus
from gridrag.pipeline import PipelineConfig, build_indexes
from gridrag.store import (
    FORMAT_VERSION,
    Manifest,
    corpus_checksum,
    default_created_at,
    index_file_sizes,
    load_index,
    save_index,
)

CFG = PipelineConfig(embedder=EmbedderConfig(dim=64), pq_m=8)


def _built(n_docs=12, seed=3):
    docs, _ = generate_corpus(CorpusSpec(n_docs=n_docs, seed=seed))
    return docs, build_indexes(docs, CFG)


def _manifest(built, checksum="0" * 64):
    return Manifest(
        format_version=FORMAT_VERSION,
        dim=CFG.embedder.dim,
        tau=CFG.router.tau,
        window_tokens=CFG.router.window_tokens,
        stride_tokens=CFG.router.stride_tokens,
        pq={"m": CFG.pq_m, "k": CFG.pq_k, "seed": CFG.pq_seed, "iters": CFG.pq_iters},
        embedder={"char_ngram": list(CFG.embedder.char_ngram), "hash_seed": CFG.embedder.hash_seed},
        counts={
            "narrative_blocks": len(built.dense),
            "tables": len(built.cells.tables),
            "cells_before_prune": built.cells.stats.cells_before_prune,
            "cells_after_prune": built.cells.stats.cells_after_prune,
            "centroids": built.cells.stats.centroids,
        },
        corpus_sha256=checksum,
        created_at=default_created_at(),
    )


def test_save_load_round_trip(tmp_path):
    _, built = _built()
    manifest = _manifest(built)
    save_index(tmp_path, built.dense, built.cells, manifest)
    dense, cells, loaded = load_index(tmp_path)

    assert dense.refs == built.dense.refs
    assert np.array_equal(dense.matrix, built.dense.matrix)
    assert loaded == manifest

    assert list(cells.tables) == list(built.cells.tables)
    assert cells.tables == built.cells.tables
    assert [cv.cell_ref for cv in cells.centroids] == [cv.cell_ref for cv in built.cells.centroids]
    assert [cv.multiplicity for cv in cells.centroids] == [cv.multiplicity for cv in built.cells.centroids]
    assert [cv.members for cv in cells.centroids] == [cv.members for cv in built.cells.centroids]
    assert np.array_equal(cells.codes, built.cells.codes)
    assert np.array_equal(cells.codebook.centroids, built.cells.codebook.centroids)


def test_save_twice_identical_bytes(tmp_path):
    _, built = _built()
    manifest = _manifest(built)
    a = tmp_path / "a"
    b = tmp_path / "b"
    save_index(a, built.dense, built.cells, manifest)
    save_index(b, built.dense, built.cells, manifest)
    for name in ("manifest.json", "dense.vec", "cells.meta", "codebook.bin", "codes.bin"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_save_load_save_byte_idempotent(tmp_path):
    _, built = _built()
    manifest = _manifest(built)
    first = tmp_path / "first"
    second = tmp_path / "second"
    save_index(first, built.dense, built.cells, manifest)
    dense, cells, loaded = load_index(first)
    save_index(second, dense, cells, loaded)
    for name in ("manifest.json", "dense.vec", "cells.meta", "codebook.bin", "codes.bin"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_tampered_codes_count_names_file(tmp_path):
    _, built = _built()
    save_index(tmp_path, built.dense, built.cells, _manifest(built))
    codes = tmp_path / "codes.bin"
    data = bytearray(codes.read_bytes())
    data[:8] = struct.pack("<Q", 999999)
    codes.write_bytes(bytes(data))
    with pytest.raises(IndexStoreError, match="codes.bin"):
        load_index(tmp_path)


def test_missing_manifest_is_not_an_index(tmp_path):
    with pytest.raises(IndexStoreError, match="not an index"):
        load_index(tmp_path)


def test_dim_mismatch_between_manifest_and_dense(tmp_path):
    _, built = _built()
    manifest = _manifest(built)
    save_index(tmp_path, built.dense, built.cells, manifest)
    text = (tmp_path / "manifest.json").read_text().replace('"dim": 64', '"dim": 128')
    (tmp_path / "manifest.json").write_text(text)
    with pytest.raises(DataError, match="dim"):
        load_index(tmp_path)


def test_version_guard_on_save(tmp_path):
    (tmp_path / "manifest.json").write_text('{"format_version": "other/9"}')
    _, built = _built()
    with pytest.raises(IndexStoreError, match="version"):
        save_index(tmp_path, built.dense, built.cells, _manifest(built))


def test_empty_corpus_index_round_trips(tmp_path):
    docs, _ = generate_corpus(CorpusSpec(n_docs=2, seed=0, narrative_fraction=1.0))
    built = build_indexes(docs, CFG)
    assert len(built.cells.tables) == 0
    manifest = _manifest(built)
    save_index(tmp_path, built.dense, built.cells, manifest)
    dense, cells, _ = load_index(tmp_path)
    assert dense.refs == built.dense.refs
    assert cells.tables == {}
    assert len(cells.centroids) == 0


def test_multiplicity_tamper_detected(tmp_path):
    _, built = _built()
    save_index(tmp_path, built.dense, built.cells, _manifest(built))
    meta = tmp_path / "cells.meta"
    text = meta.read_text().replace('"multiplicity":1', '"multiplicity":2', 1)
    meta.write_text(text)
    with pytest.raises(IndexStoreError):
        load_index(tmp_path)


def test_index_file_sizes(tmp_path):
    _, built = _built()
    save_index(tmp_path, built.dense, built.cells, _manifest(built))
    sizes = index_file_sizes(tmp_path)
    assert sizes["total"] == sum(v for k, v in sizes.items() if k != "total")
    assert sizes["codes.bin"] >= 8


def test_checksum_helper():
    assert corpus_checksum(b"abc") == corpus_checksum(b"abc")
    assert corpus_checksum(b"abc") != corpus_checksum(b"abd")
