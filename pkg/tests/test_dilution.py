import pytest

from gridrag.embedder import EmbedderConfig
from gridrag.errors import GenerationError
from gridrag.evalgen.dilution import dilution_csv, run_dilution_experiment, _dilution_headers

EMB = EmbedderConfig(dim=64)


def test_single_table_both_systems_perfect():
    rows = run_dilution_experiment([5], n_tables=1, n_queries=2, seed=0, rows=4, emb_cfg=EMB)
    assert {r.system for r in rows} == {"single-vector", "cell-aware"}
    assert all(r.recall_at_10 == 1.0 for r in rows)


def test_output_shape_two_rows_per_width():
    rows = run_dilution_experiment([4, 6], n_tables=3, n_queries=3, seed=1, rows=3, emb_cfg=EMB)
    assert len(rows) == 4
    assert [r.width for r in rows] == [4, 4, 6, 6]


def test_headers_padded_deterministically():
    assert _dilution_headers(3) == ("Lot", "Variety", "Price/Kg")
    h12 = _dilution_headers(12)
    assert h12[:3] == ("Lot", "Variety", "Price/Kg")
    assert h12[-2:] == ("Attr01", "Attr02")
    with pytest.raises(GenerationError):
        _dilution_headers(2)


def test_widths_must_be_sorted():
    with pytest.raises(GenerationError):
        run_dilution_experiment([10, 5], n_tables=2, n_queries=2, emb_cfg=EMB)


def test_csv_format():
    rows = run_dilution_experiment([4], n_tables=2, n_queries=2, seed=0, rows=3, emb_cfg=EMB)
    csv = dilution_csv(rows)
    lines = csv.strip().split("\n")
    assert lines[0] == "width,system,recall_at_10,n_queries"
    assert len(lines) == 3


def test_deterministic_for_seed():
    a = run_dilution_experiment([4, 6], n_tables=3, n_queries=4, seed=9, rows=3, emb_cfg=EMB)
    b = run_dilution_experiment([4, 6], n_tables=3, n_queries=4, seed=9, rows=3, emb_cfg=EMB)
    assert a == b
