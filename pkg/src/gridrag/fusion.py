"""Merge the narrative and structural candidate lists and rerank.

Raw scores from the two routes live on different scales (cosine in [0, 1]
versus a MaxSim sum), so each list is min-max normalized independently
before being interleaved. The normalized order only selects which
candidates reach the cross-scorer; the scorer's output alone decides the
final order.
"""

from __future__ import annotations

import json
import logging
import subprocess
from dataclasses import dataclass, replace
from typing import Mapping, Protocol, Sequence

from .router import TokenClass, tokenize

log = logging.getLogger(__name__)

ROUTE_A = "A"
ROUTE_B = "B"


@dataclass(frozen=True)
class Candidate:
    ref: str
    route: str  # "A" (narrative block) or "B" (table)
    raw_score: float
    norm_score: float | None = None
    text: str = ""


class CrossScorer(Protocol):
    def score(self, query: str, candidate_text: str) -> float: ...


def minmax_normalize(scores: Sequence[float]) -> list[float]:
    """Affine map to [0, 1]; a constant list maps to all 0.5; empty stays empty."""
    if not scores:
        return []
    lo = min(scores)
    hi = max(scores)
    if hi == lo:
        return [0.5] * len(scores)
    return [(s - lo) / (hi - lo) for s in scores]


def fuse_candidates(
    dense_hits: Sequence[tuple[str, float]],
    table_hits: Sequence[tuple[str, float]],
) -> list[Candidate]:
    """Normalize each route independently, concatenate, and sort.

    Order: normalized score descending, then route A before B, then ref
    ascending. No candidate is ever dropped here.
    """
    out: list[Candidate] = []
    for route, hits in ((ROUTE_A, dense_hits), (ROUTE_B, table_hits)):
        norms = minmax_normalize([score for _, score in hits])
        for (ref, score), norm in zip(hits, norms):
            out.append(Candidate(ref=ref, route=route, raw_score=score, norm_score=norm))
    out.sort(key=lambda c: (-(c.norm_score or 0.0), 0 if c.route == ROUTE_A else 1, c.ref))
    return out


def lexical_cross_score(query: str, text: str) -> float:
    """Default deterministic cross-scorer: unique-token overlap with a header bonus.

    Each unique query token (router tokenization, separators dropped,
    lowercased) contributes 1 if it occurs in the candidate text plus 0.5 if
    it occurs inside a "[COL: ...]" span, rewarding column-header hits.
    """
    tokens = {t.text.lower() for t in tokenize(query) if t.cls is not TokenClass.SEPARATOR}
    low = text.lower()
    spans: list[str] = []
    start = 0
    while True:
        i = low.find("[col: ", start)
        if i < 0:
            break
        j = low.find("]", i)
        if j < 0:
            break
        spans.append(low[i + 6 : j])
        start = j + 1
    score = 0.0
    for tok in tokens:
        if tok in low:
            score += 1.0
            if any(tok in span for span in spans):
                score += 0.5
    return score


class LexicalScorer:
    def score(self, query: str, candidate_text: str) -> float:
        return lexical_cross_score(query, candidate_text)


def rerank(
    query: str,
    candidates: Sequence[Candidate],
    scorer: CrossScorer,
    final_k: int,
) -> list[Candidate]:
    """Re-sort candidates solely by scorer output, descending, truncated to final_k.

    The sort is stable, so candidates with equal scores keep their incoming
    (fusion) order. A scorer failure drops that candidate with a warning
    instead of aborting the query.
    """
    scored: list[tuple[float, Candidate]] = []
    for cand in candidates:
        try:
            s = scorer.score(query, cand.text)
        except Exception as exc:
            log.warning("cross-scorer failed on %s (%s); candidate dropped", cand.ref, exc)
            continue
        scored.append((float(s), cand))
    scored.sort(key=lambda pair: -pair[0])
    return [replace(cand, raw_score=s) for s, cand in scored[:final_k]]


def rerank_with_scores(
    candidates: Sequence[Candidate],
    scores: Mapping[str, float],
    final_k: int,
) -> list[Candidate]:
    """Same ordering rule as rerank, with scores supplied per ref (external scorer).

    Candidates with no score are dropped with a warning, mirroring a scorer
    failure.
    """
    scored: list[tuple[float, Candidate]] = []
    for cand in candidates:
        if cand.ref not in scores:
            log.warning("external scorer returned no score for %s; candidate dropped", cand.ref)
            continue
        scored.append((float(scores[cand.ref]), cand))
    scored.sort(key=lambda pair: -pair[0])
    return [replace(cand, raw_score=s) for s, cand in scored[:final_k]]


def run_external_scorer(cmd: Sequence[str], qid: str, candidates: Sequence[Candidate]) -> dict[str, float]:
    """Pipe candidates through an external scoring process.

    Writes one JSONL line {"qid", "ref", "text"} per candidate to the child's
    stdin and reads {"ref", "score"} lines back.
    """
    payload = "".join(
        json.dumps({"qid": qid, "ref": c.ref, "text": c.text}, ensure_ascii=False) + "\n"
        for c in candidates
    )
    result = subprocess.run(list(cmd), input=payload, capture_output=True, text=True, check=True)
    scores: dict[str, float] = {}
    for line in result.stdout.splitlines():
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        scores[str(obj["ref"])] = float(obj["score"])
    return scores
