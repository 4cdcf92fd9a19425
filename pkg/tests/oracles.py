"""Independent brute-force reference implementations used to cross-check the package.

Everything here recomputes results from raw inputs with straight-line code and
no shared state with the implementation under test: scores use list.count over
token lists, rankings sort full score tables, and the evidence selector follows
the summary-then-ranked rule directly.
"""

from __future__ import annotations

import math
import re

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def oracle_tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def oracle_bm25_score(
    doc_tokens: list[list[str]], query_tokens: list[str], doc_id: int, k1: float, b: float
) -> float:
    """BM25 with IDF ln(1 + (N - df + 0.5)/(df + 0.5)), summed over query tokens."""
    n = len(doc_tokens)
    if n == 0:
        return 0.0
    avgdl = sum(len(d) for d in doc_tokens) / n
    dl = len(doc_tokens[doc_id])
    score = 0.0
    for term in query_tokens:
        tf = doc_tokens[doc_id].count(term)
        if tf == 0:
            continue
        df = sum(1 for d in doc_tokens if term in d)
        idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
        score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl))
    return score


def oracle_rank(
    doc_tokens: list[list[str]],
    query_tokens: list[str],
    k: int,
    k1: float,
    b: float,
    candidates: set[int] | None = None,
) -> list[tuple[int, float]]:
    """Full-sort ranking: positive scores only, descending, ties by ascending id."""
    pool = range(len(doc_tokens)) if candidates is None else sorted(candidates)
    scored = []
    for doc_id in pool:
        score = oracle_bm25_score(doc_tokens, query_tokens, doc_id, k1, b)
        if score > 0.0:
            scored.append((doc_id, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def oracle_select_evidence(
    page_paragraph_texts: list[str],
    all_doc_tokens: list[list[str]],
    page_doc_ids: list[int],
    claim_text: str,
    m: int,
    k1: float,
    b: float,
) -> list[int]:
    """Paragraph indices (within the page) picked by the summary-plus-ranked rule.

    ``all_doc_tokens`` is the whole indexed corpus (document frequencies and
    average length are corpus-wide) and ``page_doc_ids`` maps the page's
    paragraph positions onto corpus document ids.
    """
    count = len(page_paragraph_texts)
    chosen = list(range(min(2, count)))
    if count > 2:
        remaining = set(page_doc_ids[2:])
        ranked = oracle_rank(
            all_doc_tokens, oracle_tokenize(claim_text), m - 2, k1, b, candidates=remaining
        )
        id_to_pos = {doc_id: pos for pos, doc_id in enumerate(page_doc_ids)}
        chosen.extend(id_to_pos[doc_id] for doc_id, _ in ranked)
    return chosen


def oracle_fuse(w1: float, w2: float, p1: list[float], p2: list[float]) -> list[float]:
    """The convex fusion recomputed with plain Python arithmetic."""
    return [w1 * a + w2 * c for a, c in zip(p1, p2)]
