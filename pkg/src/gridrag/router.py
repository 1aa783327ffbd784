"""Structural routing: decide per block whether it is narrative or structured.

The signal is the structural density of a token window: the fraction of
tokens that are numeric, separator-like, or entity-like. Native table blocks
carry explicit structure and bypass scoring entirely; text blocks are scanned
with an overlapping sliding window so that a table dumped mid-paragraph is
still discovered.

Token classification (priority order, first match wins):
  separator: every character in {| ; , : em-dash -} or one of the literal
             tags <td> </td> <tr> </tr> <th> </th>
  numeric:   optional sign, then either a currency-prefixed number or a
             number with optional single decimal point and optional
             trailing % / currency symbol
  entity:    first character uppercase and the token is not sentence-initial
             (sentence starts follow . ! ? or the start of the text)
  plain:     everything else
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .model import Document, TABLE


class TokenClass(Enum):
    SEPARATOR = "sep"
    NUMERIC = "num"
    ENTITY = "ent"
    PLAIN = "plain"


@dataclass(frozen=True)
class Token:
    text: str
    cls: TokenClass


@dataclass(frozen=True)
class TokenStats:
    n_num: int
    n_sep: int
    n_ent: int
    n_total: int


ROUTE_NARRATIVE = "narrative"
ROUTE_STRUCTURED = "structured"

SEPARATOR_CHARS = frozenset("|;,:—-")
TAG_LITERALS = frozenset({"<td>", "</td>", "<tr>", "</tr>", "<th>", "</th>"})
_SENTENCE_ENDS = (".", "!", "?")

# Either currency-prefixed digits or digits with an optional trailing unit.
_NUMERIC_RE = re.compile(r"^[+-]?(?:[€$£]\d+(?:\.\d+)?|\d+(?:\.\d+)?[%€$£]?)$")


@dataclass(frozen=True)
class RouterConfig:
    tau: float = 0.4
    window_tokens: int = 64
    stride_tokens: int = 32

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if self.window_tokens < 1:
            raise ValueError("window_tokens must be >= 1")
        if not 1 <= self.stride_tokens <= self.window_tokens:
            raise ValueError("stride_tokens must be in [1, window_tokens]")


@dataclass(frozen=True)
class RoutedBlock:
    """One routed span: a whole table block, a whole text block, or a merged
    window range inside a long text block."""

    doc_id: str
    block_index: int
    span: tuple[int, int]  # token range [start, end) within the block, (0, 0) for tables
    route: str
    sds: float
    text: str = ""
    is_table: bool = False

    @property
    def ref(self) -> str:
        base = f"{self.doc_id}#b{self.block_index}"
        if self.is_table:
            return f"{self.doc_id}#t{self.block_index}"
        if self.span[0] == 0 and self.span[1] == 0:
            return base
        return f"{base}:w{self.span[0]}-{self.span[1]}"


def tokenize(text: str) -> list[Token]:
    """Whitespace-split and classify each token."""
    tokens: list[Token] = []
    prev: str | None = None
    for word in text.split():
        if word in TAG_LITERALS or all(ch in SEPARATOR_CHARS for ch in word):
            cls = TokenClass.SEPARATOR
        elif _NUMERIC_RE.match(word):
            cls = TokenClass.NUMERIC
        else:
            sentence_initial = prev is None or prev.endswith(_SENTENCE_ENDS)
            if word[0].isupper() and not sentence_initial:
                cls = TokenClass.ENTITY
            else:
                cls = TokenClass.PLAIN
        tokens.append(Token(text=word, cls=cls))
        prev = word
    return tokens


def token_stats(tokens: list[Token]) -> TokenStats:
    n_num = sum(1 for t in tokens if t.cls is TokenClass.NUMERIC)
    n_sep = sum(1 for t in tokens if t.cls is TokenClass.SEPARATOR)
    n_ent = sum(1 for t in tokens if t.cls is TokenClass.ENTITY)
    return TokenStats(n_num=n_num, n_sep=n_sep, n_ent=n_ent, n_total=len(tokens))


def sds(tokens: list[Token]) -> float:
    """Structural density: (numeric + separator + entity) / total, 0 for empty."""
    stats = token_stats(tokens)
    if stats.n_total == 0:
        return 0.0
    return (stats.n_num + stats.n_sep + stats.n_ent) / stats.n_total


def _window_starts(n_tokens: int, window: int, stride: int) -> list[int]:
    starts = [0]
    while starts[-1] + window < n_tokens:
        starts.append(starts[-1] + stride)
    return starts


def segment(doc: Document, cfg: RouterConfig = RouterConfig()) -> list[RoutedBlock]:
    """Route every block of a document.

    Table blocks come out structured unconditionally. Text blocks at most one
    window long are scored once; longer ones are scored per overlapping window
    and adjacent same-route overlapping windows are merged into one span. A
    merged span keeps the maximum window score, which preserves the threshold
    rule route == structured iff sds > tau for every emitted span.
    """
    routed: list[RoutedBlock] = []
    for idx, block in enumerate(doc.blocks):
        if block.kind == TABLE:
            routed.append(
                RoutedBlock(
                    doc_id=doc.id,
                    block_index=idx,
                    span=(0, 0),
                    route=ROUTE_STRUCTURED,
                    sds=1.0,
                    is_table=True,
                )
            )
            continue
        tokens = tokenize(block.content)
        n = len(tokens)
        if n <= cfg.window_tokens:
            score = sds(tokens)
            route = ROUTE_STRUCTURED if score > cfg.tau else ROUTE_NARRATIVE
            routed.append(
                RoutedBlock(
                    doc_id=doc.id,
                    block_index=idx,
                    span=(0, 0),
                    route=route,
                    sds=score,
                    text=block.content,
                )
            )
            continue
        windows = []
        for start in _window_starts(n, cfg.window_tokens, cfg.stride_tokens):
            end = min(start + cfg.window_tokens, n)
            score = sds(tokens[start:end])
            route = ROUTE_STRUCTURED if score > cfg.tau else ROUTE_NARRATIVE
            windows.append((start, end, route, score))
        merged: list[tuple[int, int, str, float]] = []
        for start, end, route, score in windows:
            if merged and merged[-1][2] == route and start < merged[-1][1]:
                ps, pe, pr, psc = merged[-1]
                merged[-1] = (ps, max(pe, end), pr, max(psc, score))
            else:
                merged.append((start, end, route, score))
        for start, end, route, score in merged:
            routed.append(
                RoutedBlock(
                    doc_id=doc.id,
                    block_index=idx,
                    span=(start, end),
                    route=route,
                    sds=score,
                    text=" ".join(t.text for t in tokens[start:end]),
                )
            )
    return routed
