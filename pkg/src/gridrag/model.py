"""Domain model for heterogeneous corpora and the JSONL exchange format.

A corpus is a list of documents; each document is an ordered list of blocks,
and each block is either free text or a rectangular table. All types are
immutable after construction and safe to share across threads.

Corpus JSONL schema (one document per line, UTF-8):

    {"id": str, "title": str,
     "blocks": [{"type": "text", "content": str}
                | {"type": "table", "headers": [str], "rows": [[str]]}]}

Query JSONL schema:

    {"qid": str, "type": "A"|"B"|"C", "text": str, "gold": [str],
     "gold_cells": [{"doc": str, "row": int, "col": int}]?}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import CorpusError

TEXT = "text"
TABLE = "table"

QUERY_TYPES = ("A", "B", "C")


@dataclass(frozen=True)
class Table:
    """Rectangular table: every row has exactly len(headers) cells."""

    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "headers", tuple(self.headers))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(self.headers) < 1:
            raise ValueError("table needs at least one header column")
        width = len(self.headers)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"ragged table: row {i} has {len(row)} cells, expected {width}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.headers)


@dataclass(frozen=True)
class Block:
    """One document block. Exactly one of content/table is populated, matching kind."""

    kind: str
    content: str = ""
    table: Table | None = None

    def __post_init__(self):
        if self.kind == TEXT:
            if self.table is not None:
                raise ValueError("text block must not carry a table")
        elif self.kind == TABLE:
            if self.table is None:
                raise ValueError("table block must carry a table")
            if self.content:
                raise ValueError("table block must not carry text content")
        else:
            raise ValueError(f"unknown block kind {self.kind!r}")

    @staticmethod
    def text(content: str) -> "Block":
        return Block(kind=TEXT, content=content)

    @staticmethod
    def of_table(table: Table) -> "Block":
        return Block(kind=TABLE, table=table)


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    blocks: tuple[Block, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.blocks:
            raise ValueError(f"document {self.id!r} has no blocks")


@dataclass(frozen=True)
class Cell:
    """One table cell with its grid coordinates and column header attached."""

    table_id: str
    row: int
    col: int
    header: str
    value: str


@dataclass(frozen=True)
class Query:
    qid: str
    qtype: str
    text: str
    gold_doc_ids: frozenset[str]
    gold_cells: tuple[tuple[str, int, int], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "gold_doc_ids", frozenset(self.gold_doc_ids))
        object.__setattr__(self, "gold_cells", tuple(tuple(c) for c in self.gold_cells))
        if self.qtype not in QUERY_TYPES:
            raise ValueError(f"query type must be one of {QUERY_TYPES}, got {self.qtype!r}")


def extract_cells(table: Table, table_id: str) -> list[Cell]:
    """All R x C cells of a rectangular table in row-major order."""
    return [
        Cell(table_id=table_id, row=i, col=j, header=table.headers[j], value=value)
        for i, row in enumerate(table.rows)
        for j, value in enumerate(row)
    ]


def _iter_lines(stream: Iterable[str] | str) -> Iterator[str]:
    # JSONL is strictly newline-delimited; splitlines() would also split on
    # unicode line separators that are legal inside JSON strings.
    if isinstance(stream, str):
        yield from stream.split("\n")
    else:
        yield from stream


def _parse_block(obj: dict, doc_id: str, line_no: int) -> Block:
    kind = obj.get("type")
    if kind == TEXT:
        content = obj.get("content")
        if not isinstance(content, str):
            raise CorpusError(f"doc {doc_id!r}: text block needs string 'content'", line_no)
        return Block.text(content)
    if kind == TABLE:
        headers = obj.get("headers")
        rows = obj.get("rows")
        if not isinstance(headers, list) or not all(isinstance(h, str) for h in headers):
            raise CorpusError(f"doc {doc_id!r}: table block needs 'headers' list of strings", line_no)
        if not isinstance(rows, list) or not all(
            isinstance(r, list) and all(isinstance(v, str) for v in r) for r in rows
        ):
            raise CorpusError(f"doc {doc_id!r}: table block needs 'rows' as list of string lists", line_no)
        width = len(headers)
        for i, row in enumerate(rows):
            if len(row) != width:
                raise CorpusError(
                    f"doc {doc_id!r}: ragged table row {i} ({len(row)} cells, expected {width})",
                    line_no,
                )
        return Block.of_table(Table(headers=tuple(headers), rows=tuple(tuple(r) for r in rows)))
    raise CorpusError(f"doc {doc_id!r}: unknown block type {kind!r}", line_no)


def parse_corpus(stream: Iterable[str] | str) -> list[Document]:
    """Parse line-delimited JSON documents, validating the full corpus contract.

    Raises CorpusError naming the offending line for malformed JSON, duplicate
    ids, ragged tables, and schema violations.
    """
    docs: list[Document] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(_iter_lines(stream), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"malformed JSON ({exc.msg})", line_no) from exc
        if not isinstance(obj, dict):
            raise CorpusError("document line must be a JSON object", line_no)
        doc_id = obj.get("id")
        if not isinstance(doc_id, str) or not doc_id:
            raise CorpusError("document needs a non-empty string 'id'", line_no)
        if doc_id in seen:
            raise CorpusError(f"duplicate document id {doc_id!r}", line_no)
        seen.add(doc_id)
        title = obj.get("title", "")
        if not isinstance(title, str):
            raise CorpusError(f"doc {doc_id!r}: 'title' must be a string", line_no)
        blocks_raw = obj.get("blocks")
        if not isinstance(blocks_raw, list) or not blocks_raw:
            raise CorpusError(f"doc {doc_id!r}: needs a non-empty 'blocks' list", line_no)
        blocks = tuple(_parse_block(b, doc_id, line_no) for b in blocks_raw)
        docs.append(Document(id=doc_id, title=title, blocks=blocks))
    return docs


def document_to_obj(doc: Document) -> dict:
    blocks = []
    for b in doc.blocks:
        if b.kind == TEXT:
            blocks.append({"type": TEXT, "content": b.content})
        else:
            assert b.table is not None
            blocks.append(
                {"type": TABLE, "headers": list(b.table.headers), "rows": [list(r) for r in b.table.rows]}
            )
    return {"id": doc.id, "title": doc.title, "blocks": blocks}


def serialize_corpus(docs: Iterable[Document]) -> str:
    """Inverse of parse_corpus; output is byte-stable for equal inputs."""
    lines = [json.dumps(document_to_obj(d), ensure_ascii=False, separators=(",", ":")) for d in docs]
    return "".join(line + "\n" for line in lines)


def parse_queries(stream: Iterable[str] | str) -> list[Query]:
    queries: list[Query] = []
    seen: set[str] = set()
    for line_no, raw in enumerate(_iter_lines(stream), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"malformed JSON ({exc.msg})", line_no) from exc
        qid = obj.get("qid")
        if not isinstance(qid, str) or not qid:
            raise CorpusError("query needs a non-empty string 'qid'", line_no)
        if qid in seen:
            raise CorpusError(f"duplicate query id {qid!r}", line_no)
        seen.add(qid)
        qtype = obj.get("type")
        if qtype not in QUERY_TYPES:
            raise CorpusError(f"query {qid!r}: 'type' must be one of {QUERY_TYPES}", line_no)
        text = obj.get("text")
        if not isinstance(text, str):
            raise CorpusError(f"query {qid!r}: 'text' must be a string", line_no)
        gold = obj.get("gold")
        if not isinstance(gold, list) or not gold or not all(isinstance(g, str) for g in gold):
            raise CorpusError(f"query {qid!r}: 'gold' must be a non-empty list of doc ids", line_no)
        cells_raw = obj.get("gold_cells") or []
        cells = []
        for c in cells_raw:
            try:
                cells.append((c["doc"], int(c["row"]), int(c["col"])))
            except (TypeError, KeyError, ValueError) as exc:
                raise CorpusError(f"query {qid!r}: bad gold_cells entry {c!r}", line_no) from exc
        queries.append(
            Query(qid=qid, qtype=qtype, text=text, gold_doc_ids=frozenset(gold), gold_cells=tuple(cells))
        )
    return queries


def query_to_obj(q: Query) -> dict:
    obj = {
        "qid": q.qid,
        "type": q.qtype,
        "text": q.text,
        "gold": sorted(q.gold_doc_ids),
    }
    if q.gold_cells:
        obj["gold_cells"] = [{"doc": d, "row": r, "col": c} for d, r, c in q.gold_cells]
    return obj


def serialize_queries(queries: Iterable[Query]) -> str:
    lines = [json.dumps(query_to_obj(q), ensure_ascii=False, separators=(",", ":")) for q in queries]
    return "".join(line + "\n" for line in lines)
