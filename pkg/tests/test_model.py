import json

import pytest
from hypothesis import given, strategies as st

from gridrag.errors import CorpusError
from gridrag.model import (
    Block,
    Cell,
    Document,
    Query,
    Table,
    extract_cells,
    parse_corpus,
    parse_queries,
    serialize_corpus,
    serialize_queries,
)


def test_parse_minimal_document():
    docs = parse_corpus('{"id":"d1","title":"t","blocks":[{"type":"text","content":"hello"}]}')
    assert len(docs) == 1
    assert docs[0].id == "d1"
    assert docs[0].blocks[0].kind == "text"
    assert docs[0].blocks[0].content == "hello"


def test_parse_table_block():
    line = json.dumps(
        {"id": "d1", "title": "t", "blocks": [{"type": "table", "headers": ["A", "B"], "rows": [["1", "2"]]}]}
    )
    docs = parse_corpus(line)
    table = docs[0].blocks[0].table
    assert table.headers == ("A", "B")
    assert table.rows == (("1", "2"),)


def test_ragged_table_names_doc_and_row():
    line = json.dumps(
        {"id": "bad-doc", "title": "t", "blocks": [{"type": "table", "headers": ["A", "B"], "rows": [["1"]]}]}
    )
    with pytest.raises(CorpusError) as exc:
        parse_corpus(line)
    assert "bad-doc" in str(exc.value)
    assert "row 0" in str(exc.value)


def test_duplicate_id_rejected():
    line = '{"id":"d1","title":"t","blocks":[{"type":"text","content":"x"}]}'
    with pytest.raises(CorpusError, match="duplicate document id"):
        parse_corpus(line + "\n" + line)


def test_malformed_json_reports_line_number():
    good = '{"id":"d1","title":"t","blocks":[{"type":"text","content":"x"}]}'
    with pytest.raises(CorpusError, match="line 2"):
        parse_corpus(good + "\n{nope\n")


def test_document_requires_blocks():
    with pytest.raises(CorpusError, match="blocks"):
        parse_corpus('{"id":"d1","title":"t","blocks":[]}')


def test_extract_cells_row_major_with_headers():
    table = Table(headers=("A", "B"), rows=(("1", "2"), ("3", "4")))
    cells = extract_cells(table, "t1")
    assert len(cells) == 4
    assert [(c.row, c.col) for c in cells] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert cells[2].header == "A"
    assert cells[2].value == "3"


def test_extract_cells_single_price_cell():
    table = Table(headers=("Price",), rows=(("0.85",),))
    (cell,) = extract_cells(table, "t1")
    assert cell == Cell(table_id="t1", row=0, col=0, header="Price", value="0.85")


def test_extract_cells_empty_table():
    table = Table(headers=("A",), rows=())
    assert extract_cells(table, "t") == []


def test_block_kind_consistency():
    with pytest.raises(ValueError):
        Block(kind="text", table=Table(headers=("A",), rows=()))
    with pytest.raises(ValueError):
        Block(kind="table")
    with pytest.raises(ValueError):
        Block(kind="image")


_cell_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\n\r"), max_size=8
)
_ids = st.text(alphabet="abcdefghij0123456789-", min_size=1, max_size=12)


@st.composite
def _documents(draw, doc_id):
    blocks = []
    for _ in range(draw(st.integers(1, 3))):
        if draw(st.booleans()):
            blocks.append(Block.text(draw(_cell_text)))
        else:
            n_cols = draw(st.integers(1, 3))
            n_rows = draw(st.integers(0, 3))
            headers = tuple(draw(_cell_text) for _ in range(n_cols))
            rows = tuple(tuple(draw(_cell_text) for _ in range(n_cols)) for _ in range(n_rows))
            blocks.append(Block.of_table(Table(headers=headers, rows=rows)))
    return Document(id=doc_id, title=draw(_cell_text), blocks=tuple(blocks))


@st.composite
def _corpora(draw):
    ids = draw(st.lists(_ids, min_size=0, max_size=4, unique=True))
    return [draw(_documents(doc_id)) for doc_id in ids]


@given(_corpora())
def test_parse_serialize_round_trip(corpus):
    assert parse_corpus(serialize_corpus(corpus)) == corpus


@given(st.integers(1, 5), st.integers(0, 6))
def test_extract_cells_count_is_rows_times_cols(n_cols, n_rows):
    table = Table(
        headers=tuple(f"h{j}" for j in range(n_cols)),
        rows=tuple(tuple(f"v{i}{j}" for j in range(n_cols)) for i in range(n_rows)),
    )
    assert len(extract_cells(table, "t")) == n_rows * n_cols


def test_query_round_trip():
    queries = [
        Query(qid="q1", qtype="B", text="Verna price", gold_doc_ids=frozenset({"d1"}), gold_cells=(("d1", 2, 3),)),
        Query(qid="q2", qtype="A", text="policy?", gold_doc_ids=frozenset({"d2", "d1"})),
    ]
    assert parse_queries(serialize_queries(queries)) == queries


def test_query_requires_gold():
    with pytest.raises(CorpusError, match="gold"):
        parse_queries('{"qid":"q1","type":"A","text":"x","gold":[]}')


def test_query_bad_type():
    with pytest.raises(CorpusError, match="type"):
        parse_queries('{"qid":"q1","type":"D","text":"x","gold":["d"]}')
