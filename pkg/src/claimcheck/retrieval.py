"""BM25 paragraph ranking and per-entity evidence assembly.

Scoring uses the non-negative IDF variant ``ln(1 + (N - df + 0.5)/(df + 0.5))``
so common terms can never push a score below zero. Defaults k1=0.9, b=0.4.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TYPE_CHECKING

from .corpus import CorpusStore, Page, Paragraph, normalize_title

if TYPE_CHECKING:
    from .claim import Claim
    from .disambiguation import EntitySet

logger = logging.getLogger(__name__)

DEFAULT_K1 = 0.9
DEFAULT_B = 0.4
DEFAULT_PER_ENTITY = 5
SUMMARY_PARAGRAPHS = 2

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs, dropping empty tokens."""
    return _TOKEN.findall(text.lower())


@dataclass
class Bm25Index:
    """Inverted index over a fixed paragraph list.

    Paragraph ids are positions in ``paragraphs`` (input order), which makes the
    ascending-id tie-break reproducible. The index is immutable after build;
    ``usage_count`` only instruments how many scoring/ranking queries were served.
    """

    paragraphs: list[Paragraph]
    postings: dict[str, dict[int, int]]
    doc_lengths: list[int]
    avgdl: float
    k1: float
    b: float
    page_pids: dict[str, list[int]]
    usage_count: int = 0

    @property
    def size(self) -> int:
        return len(self.paragraphs)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.size - df + 0.5) / (df + 0.5))

    def pids_for_page(self, title: str) -> list[int]:
        return self.page_pids.get(normalize_title(title), [])


def build_index(
    paragraphs: Sequence[Paragraph], k1: float = DEFAULT_K1, b: float = DEFAULT_B
) -> Bm25Index:
    """Deterministically build the inverted index. Empty input yields a valid empty index."""
    if k1 < 0:
        raise ValueError(f"k1 must be >= 0, got {k1}")
    if not 0 <= b <= 1:
        raise ValueError(f"b must be in [0, 1], got {b}")
    postings: dict[str, dict[int, int]] = {}
    doc_lengths: list[int] = []
    page_pids: dict[str, list[int]] = {}
    for pid, para in enumerate(paragraphs):
        tokens = tokenize(para.text)
        doc_lengths.append(len(tokens))
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, {})[pid] = tf
        page_pids.setdefault(normalize_title(para.page_title), []).append(pid)
    n = len(doc_lengths)
    avgdl = sum(doc_lengths) / n if n else 0.0
    return Bm25Index(
        paragraphs=list(paragraphs),
        postings=postings,
        doc_lengths=doc_lengths,
        avgdl=avgdl,
        k1=k1,
        b=b,
        page_pids=page_pids,
    )


def _term_score(index: Bm25Index, term: str, pid: int) -> float:
    tf = index.postings.get(term, {}).get(pid, 0)
    if tf == 0:
        return 0.0
    norm = index.k1 * (1.0 - index.b + index.b * index.doc_lengths[pid] / index.avgdl)
    return index.idf(term) * (tf * (index.k1 + 1.0)) / (tf + norm)


def bm25_score(index: Bm25Index, query_tokens: Sequence[str], pid: int) -> float:
    """Sum of per-term contributions over the query tokens (repeats count each time)."""
    if not 0 <= pid < index.size:
        raise ValueError(f"unknown paragraph id {pid}")
    index.usage_count += 1
    return sum(_term_score(index, t, pid) for t in query_tokens)


def top_k(
    index: Bm25Index,
    query: str,
    k: int,
    restrict_to: set[int] | None = None,
) -> list[tuple[int, float]]:
    """Top-k (pid, score) pairs, descending score, ties broken by ascending pid.

    Paragraphs sharing no term with the query score zero and are excluded, so the
    result may be shorter than k.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    index.usage_count += 1
    if k == 0 or index.size == 0:
        return []
    scores: dict[int, float] = {}
    for term in tokenize(query):
        posting = index.postings.get(term)
        if not posting:
            continue
        idf = index.idf(term)
        for pid, tf in posting.items():
            if restrict_to is not None and pid not in restrict_to:
                continue
            norm = index.k1 * (1.0 - index.b + index.b * index.doc_lengths[pid] / index.avgdl)
            scores[pid] = scores.get(pid, 0.0) + idf * (tf * (index.k1 + 1.0)) / (tf + norm)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


@dataclass(frozen=True)
class EvidenceParagraph:
    """A retrieved paragraph plus enough provenance to cite it."""

    page_title: str
    url: str
    index: int
    text: str

    @property
    def key(self) -> tuple[str, int]:
        return (normalize_title(self.page_title), self.index)


@dataclass
class EvidenceBlock:
    """Ordered paragraphs retrieved for one entity; no duplicate (page, index) pairs."""

    entity: str
    paragraphs: list[EvidenceParagraph] = field(default_factory=list)


@dataclass
class EvidenceSet:
    """Evidence blocks in entity order plus a deduplicated flat view."""

    blocks: list[EvidenceBlock] = field(default_factory=list)

    @property
    def paragraphs(self) -> list[EvidenceParagraph]:
        """Flattened paragraphs, first occurrence kept on duplicates."""
        seen: set[tuple[str, int]] = set()
        out: list[EvidenceParagraph] = []
        for block in self.blocks:
            for para in block.paragraphs:
                if para.key in seen:
                    continue
                seen.add(para.key)
                out.append(para)
        return out

    def keys(self) -> set[tuple[str, int]]:
        return {p.key for p in self.paragraphs}

    def sources(self) -> list[tuple[str, str]]:
        """Unique (page title, URL) pairs in first-occurrence order."""
        seen: set[str] = set()
        out: list[tuple[str, str]] = []
        for para in self.paragraphs:
            norm = normalize_title(para.page_title)
            if norm in seen:
                continue
            seen.add(norm)
            out.append((para.page_title, para.url))
        return out

    def is_empty(self) -> bool:
        return not any(block.paragraphs for block in self.blocks)


def _evidence_paragraph(page: Page, para: Paragraph) -> EvidenceParagraph:
    return EvidenceParagraph(page_title=page.title, url=page.url, index=para.index, text=para.text)


def select_evidence(page: Page, claim: "Claim", m: int, index: Bm25Index) -> EvidenceBlock:
    """First two paragraphs as the page summary, then top (m-2) BM25 hits from the rest.

    The remaining paragraphs are ranked against the full claim text; zero-score
    paragraphs are excluded, so the block may hold fewer than m paragraphs.
    """
    if m < SUMMARY_PARAGRAPHS:
        raise ValueError(f"m must be >= {SUMMARY_PARAGRAPHS}, got {m}")
    block = EvidenceBlock(entity=page.title)
    if not page.paragraphs:
        logger.warning("page %r has no paragraphs; empty evidence block", page.title)
        return block
    summary = page.paragraphs[:SUMMARY_PARAGRAPHS]
    block.paragraphs.extend(_evidence_paragraph(page, p) for p in summary)
    remaining = set(index.pids_for_page(page.title)[SUMMARY_PARAGRAPHS:])
    if remaining:
        for pid, _score in top_k(index, claim.text, m - SUMMARY_PARAGRAPHS, restrict_to=remaining):
            block.paragraphs.append(_evidence_paragraph(page, index.paragraphs[pid]))
    return block


def select_top_ranked(page: Page, claim: "Claim", m: int, index: Bm25Index) -> EvidenceBlock:
    """Pure BM25 selection within a page, no summary-first rule (selection ablation)."""
    block = EvidenceBlock(entity=page.title)
    pids = set(index.pids_for_page(page.title))
    for pid, _score in top_k(index, claim.text, m, restrict_to=pids):
        block.paragraphs.append(_evidence_paragraph(page, index.paragraphs[pid]))
    return block


def gather_evidence(
    entities: "EntitySet | Iterable[str]",
    store: CorpusStore,
    claim: "Claim",
    m: int,
    index: Bm25Index,
    use_summary: bool = True,
) -> EvidenceSet:
    """One evidence block per resolvable entity, in entity order.

    Entities without a corpus page are skipped; if none resolve the result is an
    empty set and the caller decides how to degrade.
    """
    names = list(entities.entities) if hasattr(entities, "entities") else list(entities)
    evidence = EvidenceSet()
    for name in names:
        page = store.lookup(name)
        if page is None:
            logger.info("no corpus page for entity %r", name)
            continue
        select = select_evidence if use_summary else select_top_ranked
        block = select(page, claim, m, index)
        block.entity = name
        evidence.blocks.append(block)
    return evidence


def save_index(index: Bm25Index, path: str | Path) -> None:
    """Persist paragraphs and parameters; postings are rebuilt deterministically on load."""
    payload = {
        "format": "claimcheck-bm25",
        "version": 1,
        "k1": index.k1,
        "b": index.b,
        "paragraphs": [
            {"page_title": p.page_title, "index": p.index, "text": p.text}
            for p in index.paragraphs
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_index(path: str | Path) -> Bm25Index:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "claimcheck-bm25":
        raise ValueError(f"{path}: not a BM25 index file")
    paragraphs = [
        Paragraph(page_title=p["page_title"], index=p["index"], text=p["text"])
        for p in payload["paragraphs"]
    ]
    return build_index(paragraphs, k1=payload["k1"], b=payload["b"])
