"""Paragraph-segmented knowledge source: ingestion, title normalization, page lookup.

The corpus is a line-delimited UTF-8 file, one JSON record per line:
``{"title": str, "url": str, "paragraphs": [str, ...]}``. Paragraph order in the
record is the paragraph order on the page; indices are assigned 0-based.
"""

from __future__ import annotations

import io
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

_WS_RUN = re.compile(r"\s+")


def normalize_title(raw: str) -> str:
    """Canonical page key: underscores to spaces, whitespace collapsed, casefolded.

    Pure and idempotent. An empty result signals an unusable title to callers.
    """
    return _WS_RUN.sub(" ", raw.replace("_", " ")).strip().casefold()


@dataclass(frozen=True)
class Paragraph:
    page_title: str
    index: int
    text: str


@dataclass(frozen=True)
class Page:
    title: str
    url: str
    paragraphs: tuple[Paragraph, ...]


@dataclass
class CorpusStore:
    """Immutable-after-ingestion map from normalized title to page."""

    pages: dict[str, Page] = field(default_factory=dict)
    malformed_count: int = 0

    @property
    def page_count(self) -> int:
        return len(self.pages)

    @property
    def paragraph_count(self) -> int:
        return sum(len(p.paragraphs) for p in self.pages.values())

    def lookup(self, entity: str) -> Page | None:
        """Page whose normalized title equals ``normalize_title(entity)``, else None.

        A miss is an expected value, not a failure; callers skip unresolved entities.
        """
        return self.pages.get(normalize_title(entity))

    def get_paragraph(self, title: str, index: int) -> Paragraph | None:
        page = self.lookup(title)
        if page is None or not 0 <= index < len(page.paragraphs):
            return None
        return page.paragraphs[index]

    def all_paragraphs(self) -> list[Paragraph]:
        """Every paragraph, ordered by insertion order of pages then position."""
        out: list[Paragraph] = []
        for page in self.pages.values():
            out.extend(page.paragraphs)
        return out


def _iter_lines(source: str | Path | Iterable[str]) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    elif isinstance(source, io.TextIOBase):
        yield from source
    else:
        yield from source


def _parse_record(line: str) -> Page | None:
    """One corpus record, or None when malformed."""
    try:
        raw = json.loads(line)
    except json.JSONDecodeError:
        return None
    if not isinstance(raw, dict):
        return None
    title = raw.get("title")
    if not isinstance(title, str) or not normalize_title(title):
        return None
    url = raw.get("url")
    if not isinstance(url, str):
        url = ""
    paragraphs_raw = raw.get("paragraphs")
    if not isinstance(paragraphs_raw, list):
        return None
    paragraphs = []
    for text in paragraphs_raw:
        if not isinstance(text, str) or not text.strip():
            logger.debug("dropping empty paragraph on page %r", title)
            continue
        paragraphs.append(text)
    return Page(
        title=title,
        url=url,
        paragraphs=tuple(
            Paragraph(page_title=title, index=i, text=text) for i, text in enumerate(paragraphs)
        ),
    )


def ingest_corpus(source: str | Path | Iterable[str]) -> CorpusStore:
    """Build a store from a line-delimited record stream.

    Malformed records (bad JSON, missing/empty title, missing paragraph list) are
    skipped and counted, never fatal. Duplicate titles keep the last record seen.
    Deterministic: identical input produces an identical store.
    """
    store = CorpusStore()
    for line in _iter_lines(source):
        if not line.strip():
            continue
        page = _parse_record(line)
        if page is None:
            store.malformed_count += 1
            continue
        key = normalize_title(page.title)
        if key in store.pages:
            logger.warning("duplicate title %r: keeping the later record", page.title)
        store.pages[key] = page
    return store


def save_store(store: CorpusStore, path: str | Path) -> None:
    """Persist page content as the same line-delimited record format (exact round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        for page in store.pages.values():
            record = {
                "title": page.title,
                "url": page.url,
                "paragraphs": [p.text for p in page.paragraphs],
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_store(path: str | Path) -> CorpusStore:
    return ingest_corpus(path)
