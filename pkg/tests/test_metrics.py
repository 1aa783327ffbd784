import math
from itertools import combinations, permutations

import pytest
from hypothesis import given, strategies as st

from gridrag.evalgen.metrics import ndcg_at_k, recall_at_k


def test_ndcg_ideal():
    assert ndcg_at_k(["d1", "x", "y"], {"d1"}, 10) == 1.0


def test_ndcg_second_position():
    assert ndcg_at_k(["x", "d1"], {"d1"}, 10) == pytest.approx(1.0 / math.log2(3), abs=1e-9)


def test_ndcg_miss():
    assert ndcg_at_k(["x", "y"], {"d1"}, 10) == 0.0


def test_ndcg_k_validation():
    with pytest.raises(ValueError):
        ndcg_at_k(["x"], {"x"}, 0)


def test_recall_examples():
    assert recall_at_k(["a", "x"], {"a", "b"}, 2) == 0.5
    assert recall_at_k(["a", "b"], {"a", "b"}, 5) == 1.0
    assert recall_at_k(["x", "y"], {"a"}, 2) == 0.0


def test_recall_empty_gold():
    with pytest.raises(ValueError):
        recall_at_k(["a"], set(), 3)


def _brute_ndcg(ranking, gold, k):
    dcg = 0.0
    for i, ref in enumerate(ranking[:k], start=1):
        if ref in gold:
            dcg += 1.0 / math.log2(i + 1)
    ideal = 0.0
    for i in range(1, min(len(gold), k) + 1):
        ideal += 1.0 / math.log2(i + 1)
    return dcg / ideal if ideal else 0.0


def _brute_recall(ranking, gold, k):
    return sum(1 for g in gold if g in ranking[:k]) / len(gold)


def test_small_instance_equivalence_exhaustive():
    items = ["a", "b", "c", "d", "e", "f"]
    checked = 0
    for n in range(1, 5):  # permutation count explodes past 4; 5 and 6 sampled below
        for ranking in permutations(items[:n]):
            for g in range(1, 4):
                for gold in combinations(items, g):
                    for k in (1, 2, 3, 6):
                        assert ndcg_at_k(list(ranking), set(gold), k) == pytest.approx(
                            _brute_ndcg(list(ranking), set(gold), k), abs=1e-12
                        )
                        assert recall_at_k(list(ranking), set(gold), k) == pytest.approx(
                            _brute_recall(list(ranking), set(gold), k), abs=1e-12
                        )
                        checked += 1
    assert checked > 1000


@given(
    st.permutations(["a", "b", "c", "d", "e", "f"]),
    st.sets(st.sampled_from(["a", "b", "c", "x"]), min_size=1, max_size=3),
    st.integers(1, 6),
)
def test_metric_oracle_random_instances(ranking, gold, k):
    ranking = list(ranking)
    assert ndcg_at_k(ranking, gold, k) == pytest.approx(_brute_ndcg(ranking, gold, k), abs=1e-12)
    assert recall_at_k(ranking, gold, k) == pytest.approx(_brute_recall(ranking, gold, k), abs=1e-12)
