"""Seeded generator for a desk-scale mixed corpus and its evaluation queries.

The corpus splits into two hemispheres. Narrative documents hold templated
prose (reports, contracts, emails), each carrying one uniquely coded fact so
a factual query has exactly one gold document. Structured documents hold one
settlement table each, keyed by a (week, retailer) pair that is unique
across the corpus, with one variety per row, so a (variety, week, retailer)
triple pins exactly one cell. Cell values are drawn from small pools on
purpose: the same number appears in many cells of many tables, which is
precisely the ambiguity a flattened single-vector representation struggles
with.

Prose mentions weeks below the settlement range so that a week named in a
table query never also appears as narrative evidence. Everything is driven
by one seeded RNG: equal seeds give byte-identical corpora, gold metadata,
and query files.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from ..errors import GenerationError
from ..model import Block, Document, Query, Table

VARIETIES = (
    "Verna", "Eureka", "Fino", "Primofiori", "Lisbon", "Meyer", "Interdonato", "Femminello",
    "Genoa", "Lunario", "Villafranca", "Monachello", "Bearss", "Ponderosa", "Adamo", "Karystini",
    "Vakalou", "Maglini", "Continella", "Erdemli", "Dorshapo", "Perrine", "Harvey", "Bell",
    "Avon", "Berna", "Cascade", "Corona", "Delta", "Galligan", "Gilman", "Limoneira",
    "Prior", "Rosenberger", "Cook", "Sauvage", "Baboon", "Etrog", "Yuzu", "Sudachi",
    "Kabosu", "Rangpur", "Volkamer", "Karna", "Khatta", "Otaheite", "Taylor", "Millsweet",
    "Pomona", "Seville", "Bergamot", "Chinotto", "Calamondin", "Santateresa", "Kutdiken", "Molla",
    "Zagara", "Palestine", "Jambhiri", "Ichang", "Ujukitsu", "Hyuganatsu", "Tahiti", "Nepali",
)

RETAILERS = ("Mercadona", "Carrefour", "Lidl", "Aldi", "Tesco", "Rewe", "Auchan", "Spar")

SETTLEMENT_SCHEMA = (
    "Variety", "Week", "Retailer", "Price/Kg", "Discount", "Size",
    "Volume", "Origin", "Grade", "Brix", "Moisture", "Lot",
)

ORIGINS = ("Murcia", "Alicante", "Valencia", "Almeria", "Malaga", "Huelva", "Catania", "Syracuse")
SIZES = ("XS", "S", "M", "L", "XL")
GRADES = ("AA", "A", "B", "Premium", "Industrial")
PRICE_POOL = tuple(f"{0.05 * i:.2f}" for i in range(4, 31))
DISCOUNT_POOL = ("0%", "2%", "4%", "6%", "8%", "12%")
VOLUME_POOL = tuple(str(v) for v in range(200, 5001, 350))
BRIX_POOL = tuple(f"{9.0 + 0.5 * i:.1f}" for i in range(9))
MOISTURE_POOL = ("86%", "87%", "88%", "89%", "90%")

# Settlement weeks avoid multiples of five so a week number never collides
# with the second decimal of a pooled price ("0.40" tokenizes to "0"/"40").
SETTLEMENT_WEEKS = tuple(w for w in range(14, 53) if w % 5 != 0)
NARRATIVE_WEEKS = tuple(range(2, 10))

EMPTY_FILLERS = ("de", "la", "el", "n/a")

COLWORD = {
    "Price/Kg": "price",
    "Discount": "discount",
    "Size": "size",
    "Volume": "volume",
    "Origin": "origin",
    "Grade": "grade",
    "Brix": "brix",
    "Moisture": "moisture",
    "Lot": "lot",
}

NARRATIVE_KINDS = ("contract", "report", "email")


@dataclass(frozen=True)
class CorpusSpec:
    n_docs: int = 200
    narrative_fraction: float = 0.5
    table_rows: tuple[int, int] = (5, 50)
    table_cols: tuple[int, int] = (3, 12)
    empty_cell_rate: float = 0.15
    varieties: tuple[str, ...] = VARIETIES
    weeks: tuple[int, ...] = SETTLEMENT_WEEKS
    retailers: tuple[str, ...] = RETAILERS
    columns: tuple[str, ...] = SETTLEMENT_SCHEMA
    seed: int = 0

    def __post_init__(self):
        if self.n_docs < 2:
            raise ValueError("n_docs must be >= 2")
        if not 0.0 <= self.narrative_fraction <= 1.0:
            raise ValueError("narrative_fraction must be in [0, 1]")
        if not 0.0 <= self.empty_cell_rate <= 1.0:
            raise ValueError("empty_cell_rate must be in [0, 1]")
        for name, (lo, hi) in (("table_rows", self.table_rows), ("table_cols", self.table_cols)):
            if lo < 1 or hi < lo:
                raise ValueError(f"{name} range ({lo}, {hi}) is empty or invalid")
        if self.table_rows[1] > len(self.varieties):
            raise ValueError("table_rows max exceeds the variety vocabulary; rows could not stay unique")
        if self.table_cols[1] > len(self.columns):
            raise ValueError("table_cols max exceeds the settlement schema width")


@dataclass(frozen=True)
class QueryCounts:
    type_a: int = 20
    type_b: int = 20
    type_c: int = 10


def _fact_sentence(rng: random.Random, kind: str, code: str) -> tuple[str, dict]:
    if kind == "contract":
        meta = {
            "brix": rng.choice(BRIX_POOL),
            "variety": rng.choice(VARIETIES),
            "retailer": rng.choice(RETAILERS),
        }
        fact = (
            f"Contract {code} sets the brix settlement floor at {meta['brix']} "
            f"for {meta['variety']} deliveries to {meta['retailer']}."
        )
    elif kind == "report":
        meta = {
            "pct": rng.choice(("12", "18", "23", "27", "31", "36")),
            "origin": rng.choice(ORIGINS),
            "week": rng.choice(NARRATIVE_WEEKS),
        }
        fact = (
            f"Audit {code} recorded a {meta['pct']} percent cut in water usage "
            f"at the {meta['origin']} groves during week {meta['week']}."
        )
    else:
        meta = {
            "retailer": rng.choice(RETAILERS),
            "week": rng.choice(NARRATIVE_WEEKS),
        }
        fact = (
            f"Reference {code}: the {meta['retailer']} settlement from week "
            f"{meta['week']} awaits sign-off by Friday."
        )
    return fact, meta


def _filler_sentence(rng: random.Random) -> str:
    templates = (
        "The steering committee approved the irrigation plan without changes.",
        f"Retail demand for {rng.choice(VARIETIES)} lemons held firm through the quarter.",
        f"{rng.choice(RETAILERS)} asked for earlier delivery windows on size {rng.choice(SIZES)} fruit.",
        "Cold-chain audits continue on a monthly cadence.",
        f"The {rng.choice(ORIGINS)} cooperative renewed its water stewardship pledge.",
        "Penalties are waived when a delay stays under three working days.",
        f"Packing lines ran at {rng.choice(('72', '81', '88', '93'))} percent capacity during week {rng.choice(NARRATIVE_WEEKS)}.",
        "Legal asked for one more review cycle on the annex.",
        "Finance reconciled the advance payments before closing the books.",
        f"The export desk flagged {rng.choice(VARIETIES)} shipments for an extra quality gate.",
    )
    return rng.choice(templates)


def _narrative_doc(rng: random.Random, index: int) -> tuple[Document, dict]:
    kind = NARRATIVE_KINDS[index % len(NARRATIVE_KINDS)]
    prefix = {"contract": "CT", "report": "AUD", "email": "MSG"}[kind]
    code = f"{prefix}-{1000 + index}"
    fact, meta = _fact_sentence(rng, kind, code)
    blocks = []
    n_blocks = rng.randint(1, 3)
    fact_block = rng.randrange(n_blocks)
    for b in range(n_blocks):
        if b == fact_block:
            # The coded fact stands in its own short paragraph.
            sentences = [fact]
            if rng.random() < 0.5:
                sentences.append(_filler_sentence(rng))
        else:
            sentences = [_filler_sentence(rng) for _ in range(rng.randint(2, 4))]
        blocks.append(Block.text(" ".join(sentences)))
    doc_id = f"nar-{index:04d}"
    title = {"contract": f"Supply contract {code}", "report": f"Sustainability audit {code}", "email": f"Thread {code}"}[kind]
    gold = {"doc": doc_id, "kind": kind, "code": code, "fact": fact, **meta}
    return Document(id=doc_id, title=title, blocks=tuple(blocks)), gold


def _value_for(rng: random.Random, header: str, week: int, retailer: str, doc_index: int, row: int) -> str:
    if header == "Week":
        return str(week)
    if header == "Retailer":
        return retailer
    if header == "Price/Kg":
        return rng.choice(PRICE_POOL)
    if header == "Discount":
        return rng.choice(DISCOUNT_POOL)
    if header == "Size":
        return rng.choice(SIZES)
    if header == "Volume":
        return rng.choice(VOLUME_POOL)
    if header == "Origin":
        return rng.choice(ORIGINS)
    if header == "Grade":
        return rng.choice(GRADES)
    if header == "Brix":
        return rng.choice(BRIX_POOL)
    if header == "Moisture":
        return rng.choice(MOISTURE_POOL)
    if header == "Lot":
        return f"LT-{doc_index:02d}{row:02d}"
    raise ValueError(f"no value pool for header {header!r}")


def _structured_doc(
    rng: random.Random, spec: CorpusSpec, index: int, week: int, retailer: str
) -> tuple[Document, dict]:
    n_cols = rng.randint(*spec.table_cols)
    headers = spec.columns[:n_cols]
    n_rows = rng.randint(*spec.table_rows)
    row_varieties = rng.sample(spec.varieties, n_rows)
    rows = []
    for r, variety in enumerate(row_varieties):
        row = []
        for c, header in enumerate(headers):
            if header == "Variety":
                row.append(variety)
                continue
            value = _value_for(rng, header, week, retailer, index, r)
            # Key columns never go empty; value columns do at the configured rate.
            if c >= 3 and rng.random() < spec.empty_cell_rate:
                value = "" if rng.random() < 0.7 else rng.choice(EMPTY_FILLERS)
            row.append(value)
        rows.append(tuple(row))
    table = Table(headers=headers, rows=tuple(rows))
    doc_id = f"tab-{index:04d}"
    doc = Document(id=doc_id, title=f"Settlement sheet week {week} {retailer}", blocks=(Block.of_table(table),))
    gold = {
        "doc": doc_id,
        "week": week,
        "retailer": retailer,
        "block": 0,
        "headers": list(headers),
        "n_rows": n_rows,
        "varieties": list(row_varieties),
    }
    return doc, gold


def generate_corpus(spec: CorpusSpec = CorpusSpec()) -> tuple[list[Document], dict]:
    """Build the corpus plus gold metadata; byte-identical for equal specs."""
    rng = random.Random(spec.seed)
    n_narrative = round(spec.n_docs * spec.narrative_fraction)
    n_structured = spec.n_docs - n_narrative
    pair_grid = [(w, r) for w in spec.weeks for r in spec.retailers]
    if n_structured > len(pair_grid):
        raise GenerationError(
            f"cannot mint {n_structured} unique (week, retailer) pairs from a grid of {len(pair_grid)}"
        )
    pairs = rng.sample(pair_grid, n_structured)

    docs: list[Document] = []
    narrative_gold: list[dict] = []
    structured_gold: list[dict] = []
    for i in range(n_narrative):
        doc, gold = _narrative_doc(rng, i)
        docs.append(doc)
        narrative_gold.append(gold)
    for i, (week, retailer) in enumerate(pairs):
        doc, gold = _structured_doc(rng, spec, i, week, retailer)
        docs.append(doc)
        structured_gold.append(gold)
    gold_meta = {
        "seed": spec.seed,
        "n_docs": spec.n_docs,
        "narrative": narrative_gold,
        "structured": structured_gold,
    }
    return docs, gold_meta


def _type_a_query(entry: dict, qid: str) -> Query:
    code = entry["code"]
    kind = entry["kind"]
    if kind == "contract":
        text = f"What brix settlement floor does contract {code} set?"
    elif kind == "report":
        text = f"What water usage cut did audit {code} record?"
    else:
        text = f"Which settlement does reference {code} leave awaiting sign-off?"
    return Query(qid=qid, qtype="A", text=text, gold_doc_ids=frozenset({entry["doc"]}))


def generate_queries(
    docs: Sequence[Document],
    gold_meta: dict,
    counts: QueryCounts = QueryCounts(),
    seed: int = 0,
) -> list[Query]:
    """Mint evaluation queries against a generated corpus.

    Type A paraphrases one coded narrative fact. Type B names a (variety,
    week, retailer, column) combination that exists in exactly one cell of
    one table; the target cell is recorded. Type C pairs a contract's stated
    threshold with one settlement table and takes both documents as gold.
    """
    rng = random.Random(seed)
    doc_by_id = {d.id: d for d in docs}
    queries: list[Query] = []

    narrative = list(gold_meta["narrative"])
    if counts.type_a > len(narrative):
        raise GenerationError(f"requested {counts.type_a} type-A queries, only {len(narrative)} narrative docs")
    for i, entry in enumerate(rng.sample(narrative, counts.type_a)):
        queries.append(_type_a_query(entry, qid=f"qa-{i:03d}"))

    structured = list(gold_meta["structured"])
    candidates_b: list[tuple[dict, int]] = []
    for entry in structured:
        headers = entry["headers"]
        if len(headers) < 4:
            continue
        for row in range(entry["n_rows"]):
            candidates_b.append((entry, row))
    rng.shuffle(candidates_b)
    minted_b = 0
    b_iter = iter(candidates_b)
    while minted_b < counts.type_b:
        try:
            entry, row = next(b_iter)
        except StopIteration:
            raise GenerationError(
                f"requested {counts.type_b} type-B queries, corpus yields only {minted_b} unique cells"
            ) from None
        doc = doc_by_id[entry["doc"]]
        table = doc.blocks[entry["block"]].table
        assert table is not None
        eligible = [
            c
            for c in range(3, len(table.headers))
            if table.rows[row][c].strip() and table.rows[row][c].strip().lower() not in EMPTY_FILLERS
        ]
        if not eligible:
            continue
        col = rng.choice(eligible)
        header = table.headers[col]
        variety = table.rows[row][0]
        text = f"{variety} {COLWORD[header]} week {entry['week']} {entry['retailer']}"
        queries.append(
            Query(
                qid=f"qb-{minted_b:03d}",
                qtype="B",
                text=text,
                gold_doc_ids=frozenset({entry["doc"]}),
                gold_cells=((entry["doc"], row, col),),
            )
        )
        minted_b += 1

    contracts = [e for e in gold_meta["narrative"] if e["kind"] == "contract"]
    if counts.type_c > min(len(contracts), len(structured)):
        raise GenerationError(
            f"requested {counts.type_c} type-C queries, corpus supports only "
            f"{min(len(contracts), len(structured))}"
        )
    chosen_contracts = rng.sample(contracts, counts.type_c)
    used_tables: set[str] = set()
    for i, contract in enumerate(chosen_contracts):
        # Prefer tables that actually carry a Brix column, ideally for the
        # same retailer the contract names.
        brix = [e for e in structured if "Brix" in e["headers"] and e["doc"] not in used_tables]
        same_retailer = [e for e in brix if e["retailer"] == contract["retailer"]]
        pool = same_retailer or brix or [e for e in structured if e["doc"] not in used_tables]
        entry = rng.choice(pool)
        used_tables.add(entry["doc"])
        text = (
            f"settlement week {entry['week']} {entry['retailer']} brix floor "
            f"contract {contract['code']}"
        )
        queries.append(
            Query(
                qid=f"qc-{i:03d}",
                qtype="C",
                text=text,
                gold_doc_ids=frozenset({contract["doc"], entry["doc"]}),
            )
        )
    return queries
