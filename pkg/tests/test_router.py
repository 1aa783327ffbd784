import random

import pytest
from hypothesis import given, strategies as st

from gridrag.model import Block, Document, Table
from gridrag.router import (
    ROUTE_NARRATIVE,
    ROUTE_STRUCTURED,
    RouterConfig,
    TokenClass,
    Token,
    sds,
    segment,
    token_stats,
    tokenize,
)

S, N, E, P = TokenClass.SEPARATOR, TokenClass.NUMERIC, TokenClass.ENTITY, TokenClass.PLAIN


def classes(text):
    return [t.cls for t in tokenize(text)]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_markdown_row():
    assert classes("| Verna | 0.85 |") == [S, E, S, N, S]


def test_tokenize_sentence_initial_capital_is_plain():
    assert classes("The price rose.") == [P, P, P]


def test_tokenize_capital_after_sentence_end_is_plain():
    # "Lemons" follows "rose." so it starts a new sentence.
    assert classes("Price rose. Lemons fell.") == [P, P, P, P]


def test_tokenize_mid_sentence_capital_is_entity():
    assert classes("Verna and Eureka are lemons") == [P, P, E, P, P]


def test_tokenize_html_tags_are_separators():
    assert classes("<tr> <th> Name </th> </tr>") == [S, S, E, S, S]
    assert classes("<table> x </table>") == [P, P, P]


def test_tokenize_numeric_variants():
    for tok in ["42", "42.0", "0.85", "+10", "-3.5", "42%", "€0.85", "0.85€", "£10", "-$5"]:
        assert classes(tok) == [N], tok
    for tok in ["%42", "1.2.3", "1,200", "42.", "$-5", "ABC-12"]:
        assert classes(tok) != [N], tok


def test_tokenize_separator_runs():
    assert classes("--") == [S]
    assert classes("a — b") == [P, S, P]
    assert classes(": ; ,") == [S, S, S]
    assert classes(". . .") == [P, P, P]


def test_sds_examples():
    assert sds([]) == 0.0
    assert sds(tokenize("| Verna | 0.85 |")) == 1.0
    assert sds(tokenize("the price was stable this week")) == 0.0


def test_token_stats_disjoint():
    stats = token_stats(tokenize("Mixed 42 | Verna — total: 0.5€ ok"))
    assert (stats.n_num, stats.n_sep, stats.n_ent, stats.n_total) == (2, 2, 1, 8)


def _doc(blocks):
    return Document(id="d", title="", blocks=tuple(blocks))


def test_segment_table_is_structured_unconditionally():
    table = Table(headers=("A",), rows=(("1",),))
    routed = segment(_doc([Block.of_table(table)]), RouterConfig(tau=1.0))
    assert len(routed) == 1
    assert routed[0].route == ROUTE_STRUCTURED
    assert routed[0].is_table
    assert routed[0].ref == "d#t0"


def test_segment_short_prose_single_narrative_span():
    text = " ".join(["word"] * 30)
    routed = segment(_doc([Block.text(text)]), RouterConfig(tau=0.4))
    assert len(routed) == 1
    assert routed[0].route == ROUTE_NARRATIVE
    assert routed[0].sds == 0.0
    assert routed[0].span == (0, 0)
    assert routed[0].text == text
    assert routed[0].ref == "d#b0"


def test_segment_markdown_dump_is_structured():
    text = " ".join(["| A | 1 |"] * 20)  # 100 tokens, all separator/entity/numeric
    routed = segment(_doc([Block.text(text)]), RouterConfig(tau=0.4))
    assert all(rb.route == ROUTE_STRUCTURED for rb in routed)
    assert len(routed) == 1  # overlapping same-route windows merge into one span
    assert routed[0].span == (0, 100)


def test_segment_mixed_block_splits_spans():
    prose = " ".join(["alpha"] * 64)
    dump = " ".join(["| 1 |"] * 22)  # 66 tokens
    routed = segment(_doc([Block.text(prose + " " + dump)]), RouterConfig(tau=0.4))
    routes = [rb.route for rb in routed]
    assert ROUTE_NARRATIVE in routes
    assert ROUTE_STRUCTURED in routes
    spans = [rb.span for rb in routed]
    assert spans == sorted(spans)
    assert spans[0][0] == 0
    assert spans[-1][1] == 130


def test_segment_empty_text_block_is_narrative():
    routed = segment(_doc([Block.text("")]))
    assert len(routed) == 1
    assert routed[0].route == ROUTE_NARRATIVE
    assert routed[0].sds == 0.0


def test_router_config_validation():
    with pytest.raises(ValueError):
        RouterConfig(tau=1.5)
    with pytest.raises(ValueError):
        RouterConfig(stride_tokens=100, window_tokens=50)
    with pytest.raises(ValueError):
        RouterConfig(window_tokens=0)


_words = st.sampled_from(["verna", "Verna", "0.85", "|", "the", "price", "42%", "<td>", "---", "x.", "Week"])


@given(st.lists(_words, max_size=120))
def test_sds_bounded(words):
    value = sds(tokenize(" ".join(words)))
    assert 0.0 <= value <= 1.0


@given(st.lists(_words, max_size=40))
def test_appending_separator_never_decreases_sds(words):
    text = " ".join(words)
    assert sds(tokenize(text + " |")) >= sds(tokenize(text))


@given(st.lists(_words, max_size=60), st.floats(0.0, 1.0))
def test_route_iff_threshold(words, tau):
    text = " ".join(words)
    routed = segment(_doc([Block.text(text)]), RouterConfig(tau=tau))
    for rb in routed:
        assert (rb.route == ROUTE_STRUCTURED) == (rb.sds > tau)


@given(st.lists(_words, max_size=200))
def test_segment_deterministic(words):
    doc = _doc([Block.text(" ".join(words))])
    cfg = RouterConfig()
    assert segment(doc, cfg) == segment(doc, cfg)


def test_windowed_spans_cover_all_tokens():
    rng = random.Random(5)
    words = [rng.choice(["x", "| 1 |", "Verna", "y z"]) for _ in range(80)]
    text = " ".join(words)
    n = len(tokenize(text))
    routed = segment(_doc([Block.text(text)]), RouterConfig(window_tokens=16, stride_tokens=8))
    assert routed[0].span[0] == 0
    assert max(rb.span[1] for rb in routed) == n
