import numpy as np
import pytest
from hypothesis import given, strategies as st

from gridrag.fusion import (
    Candidate,
    LexicalScorer,
    fuse_candidates,
    lexical_cross_score,
    minmax_normalize,
    rerank,
    rerank_with_scores,
)


def test_minmax_affine():
    assert minmax_normalize([2, 4, 6]) == [0.0, 0.5, 1.0]


def test_minmax_degenerate_all_half():
    assert minmax_normalize([5, 5]) == [0.5, 0.5]


def test_minmax_empty():
    assert minmax_normalize([]) == []


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=20))
def test_minmax_monotone(scores):
    norms = minmax_normalize(scores)
    assert all(0.0 <= n <= 1.0 for n in norms)
    for i in range(len(scores)):
        for j in range(len(scores)):
            if scores[i] < scores[j]:
                assert norms[i] <= norms[j]
            elif scores[i] == scores[j]:
                assert norms[i] == norms[j]


def test_minmax_preserves_argsort_separated_values():
    scores = [3.0, -1.0, 7.5, 0.25, 5.0]
    norms = minmax_normalize(scores)
    assert np.array_equal(np.argsort(scores), np.argsort(norms))


def test_fuse_hand_example():
    merged = fuse_candidates([("x", 0.9), ("y", 0.5)], [("t", 10.0), ("u", 2.0)])
    assert [c.ref for c in merged] == ["x", "t", "y", "u"]
    assert [c.norm_score for c in merged] == [1.0, 1.0, 0.0, 0.0]
    assert [c.route for c in merged] == ["A", "B", "A", "B"]


def test_fuse_one_empty_list():
    merged = fuse_candidates([], [("t", 3.0), ("u", 1.0)])
    assert [c.ref for c in merged] == ["t", "u"]
    merged = fuse_candidates([("x", 0.2)], [])
    assert [c.ref for c in merged] == ["x"]


def test_fuse_both_empty():
    assert fuse_candidates([], []) == []


@given(
    st.lists(st.tuples(st.text("ab", min_size=1, max_size=3), st.floats(-5, 5)), max_size=8),
    st.lists(st.tuples(st.text("cd", min_size=1, max_size=3), st.floats(-5, 5)), max_size=8),
)
def test_fuse_never_drops(dense, table):
    merged = fuse_candidates(dense, table)
    assert len(merged) == len(dense) + len(table)


def _cands(*pairs):
    return [Candidate(ref=r, route="A", raw_score=0.0, norm_score=n, text=t) for r, n, t in pairs]


class _Const:
    def score(self, query, text):
        return 1.0


class _Overlap:
    def score(self, query, text):
        return sum(1.0 for w in set(query.split()) if w in text)


class _Boom:
    def score(self, query, text):
        if text == "bad":
            raise RuntimeError("no score")
        return len(text)


def test_rerank_constant_scorer_keeps_fusion_order():
    cands = _cands(("z", 1.0, "t1"), ("a", 0.7, "t2"), ("m", 0.3, "t3"))
    out = rerank("q", cands, _Const(), final_k=3)
    assert [c.ref for c in out] == ["z", "a", "m"]


def test_rerank_overlap_dominance():
    cands = _cands(("full", 0.1, "alpha beta gamma"), ("none", 0.9, "zzz"))
    out = rerank("alpha beta gamma", cands, _Overlap(), final_k=2)
    assert out[0].ref == "full"


def test_rerank_truncates():
    cands = _cands(*[(f"c{i}", 0.5, "t") for i in range(5)])
    assert len(rerank("q", cands, _Const(), final_k=1)) == 1


def test_rerank_drops_failing_candidate(caplog):
    cands = _cands(("ok", 0.9, "fine"), ("broken", 0.5, "bad"))
    with caplog.at_level("WARNING"):
        out = rerank("q", cands, _Boom(), final_k=5)
    assert [c.ref for c in out] == ["ok"]
    assert any("broken" in message for message in caplog.messages)


def test_rerank_with_scores_matches_rerank_rule():
    cands = _cands(("a", 0.2, "x"), ("b", 0.9, "y"), ("c", 0.5, "z"))
    out = rerank_with_scores(cands, {"a": 3.0, "c": 7.0}, final_k=5)
    assert [c.ref for c in out] == ["c", "a"]  # "b" missing -> dropped


def test_lexical_no_overlap():
    assert lexical_cross_score("apple", "zzzz") == 0.0


def test_lexical_header_bonus():
    assert lexical_cross_score("price", "[COL: Price] [VAL: 0.85]") == 1.5


def test_lexical_unique_tokens():
    assert lexical_cross_score("price price", "[COL: Price] [VAL: 0.85]") == 1.5


def test_lexical_drops_separators():
    assert lexical_cross_score("| price |", "[COL: Price] [VAL: 0.85]") == 1.5


def test_lexical_body_hit_without_header():
    assert lexical_cross_score("verna", "[COL: Variety] [VAL: Verna]") == 1.0


def test_scorer_protocol_instance():
    assert LexicalScorer().score("price", "[COL: Price] [VAL: x]") == 1.5
