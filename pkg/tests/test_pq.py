import numpy as np
import pytest

from gridrag.cell_index import decode_pq, encode_pq, train_pq
from gridrag.errors import DataError


def _unit_rows(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return (v / np.linalg.norm(v, axis=1, keepdims=True)).astype(np.float32)


def test_sixteen_distinct_points_reconstruct_exactly():
    rng = np.random.default_rng(0)
    data = _unit_rows(rng, 16, 8)
    cb = train_pq(data, m=1, k=16, seed=3)
    codes = encode_pq(cb, data)
    recon = decode_pq(cb, codes)
    assert np.array_equal(recon, data)
    # k-means oracle: with k >= n distinct points the inertia is exactly zero
    assert float(((recon - data) ** 2).sum()) == 0.0


def test_single_vector_exact():
    data = (np.ones((1, 8)) / np.sqrt(8)).astype(np.float32)
    cb = train_pq(data, m=2, k=16, seed=1)
    recon = decode_pq(cb, encode_pq(cb, data))
    assert np.array_equal(recon, data)


def test_same_seed_same_codebook_bytes():
    rng = np.random.default_rng(5)
    data = _unit_rows(rng, 300, 32)
    a = train_pq(data, m=4, k=16, seed=9)
    b = train_pq(data, m=4, k=16, seed=9)
    assert a.centroids.tobytes() == b.centroids.tobytes()


def test_different_seed_changes_codebook():
    rng = np.random.default_rng(5)
    data = _unit_rows(rng, 300, 32)
    a = train_pq(data, m=4, k=16, seed=9)
    b = train_pq(data, m=4, k=16, seed=10)
    assert a.centroids.tobytes() != b.centroids.tobytes()


def test_codes_shape_and_range():
    rng = np.random.default_rng(2)
    data = _unit_rows(rng, 100, 32)
    cb = train_pq(data, m=8, k=16, seed=0)
    codes = encode_pq(cb, data)
    assert codes.shape == (100, 8)
    assert codes.dtype == np.uint8
    assert codes.max() < 16


def test_decode_dim():
    rng = np.random.default_rng(2)
    data = _unit_rows(rng, 40, 32)
    cb = train_pq(data, m=8, k=16, seed=0)
    assert decode_pq(cb, encode_pq(cb, data)).shape == (40, 32)


def test_reconstruction_error_bounded_by_training_worst_case():
    rng = np.random.default_rng(7)
    data = _unit_rows(rng, 200, 32)
    cb = train_pq(data, m=8, k=16, seed=0)
    recon = decode_pq(cb, encode_pq(cb, data))
    errors = np.linalg.norm((recon - data).astype(np.float64), axis=1)
    worst = errors.max()
    for i in range(0, 200, 17):
        assert np.linalg.norm((recon[i] - data[i]).astype(np.float64)) <= worst + 1e-12


def test_train_errors():
    with pytest.raises(DataError):
        train_pq(np.zeros((0, 16), dtype=np.float32))
    with pytest.raises(DataError, match="divisible"):
        train_pq(np.ones((4, 10), dtype=np.float32), m=4)


def test_encode_dim_mismatch():
    data = np.ones((4, 16), dtype=np.float32)
    cb = train_pq(data, m=4, k=16, seed=0)
    with pytest.raises(DataError):
        encode_pq(cb, np.ones((2, 8), dtype=np.float32))
