"""Corpus ingestion, normalization, and lookup behavior."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from claimcheck.corpus import (
    ingest_corpus,
    load_store,
    normalize_title,
    save_store,
)

from conftest import FIXTURES


class TestNormalizeTitle:
    def test_underscores_fold_to_spaces(self):
        assert normalize_title("Barack_Obama") == "barack obama"

    def test_whitespace_collapses(self):
        assert normalize_title("  The   Beatles ") == "the beatles"

    def test_casefold_only(self):
        assert normalize_title("X") == "x"

    def test_empty_result_allowed(self):
        assert normalize_title("  _ _ ") == ""

    @given(st.text(max_size=60))
    def test_idempotent(self, raw):
        once = normalize_title(raw)
        assert normalize_title(once) == once


class TestIngest:
    def test_empty_stream(self):
        store = ingest_corpus([])
        assert (store.page_count, store.paragraph_count) == (0, 0)

    def test_fixture_counts(self):
        # corpus_mini.jsonl holds 3 records with 3 + 2 + 2 paragraphs (hand count)
        store = ingest_corpus(FIXTURES / "corpus_mini.jsonl")
        assert (store.page_count, store.paragraph_count) == (3, 7)
        assert store.malformed_count == 0

    def test_titleless_record_counted_not_fatal(self):
        lines = [
            json.dumps({"title": "A Page", "url": "u", "paragraphs": ["some text here"]}),
            json.dumps({"url": "u", "paragraphs": ["orphan paragraph"]}),
        ]
        store = ingest_corpus(lines)
        assert store.page_count == 1
        assert store.malformed_count == 1

    def test_bad_json_counted(self):
        store = ingest_corpus(["{not json", json.dumps({"title": "B", "url": "", "paragraphs": ["x y"]})])
        assert store.page_count == 1
        assert store.malformed_count == 1

    def test_unreadable_source_raises(self, tmp_path):
        with pytest.raises(OSError):
            ingest_corpus(tmp_path / "missing.jsonl")

    def test_deterministic(self):
        lines = [json.dumps({"title": "T", "url": "u", "paragraphs": ["a b", "c d"]})]
        assert ingest_corpus(lines) == ingest_corpus(list(lines))

    def test_paragraph_indices_contiguous(self, mini_store):
        for page in mini_store.pages.values():
            assert [p.index for p in page.paragraphs] == list(range(len(page.paragraphs)))


class TestLookup:
    def test_exact_title(self, mini_store):
        page = mini_store.lookup("Harbor Lights")
        assert page is not None and page.title == "Harbor Lights"

    def test_case_and_underscore_variants(self, mini_store):
        assert mini_store.lookup("harbor_lights") is mini_store.lookup("HARBOR  Lights")

    def test_absent_entity(self, mini_store):
        assert mini_store.lookup("Atlantis") is None

    def test_roundtrip_every_ingested_title(self, mini_store):
        for page in mini_store.pages.values():
            assert mini_store.lookup(normalize_title(page.title)) is page

    def test_get_paragraph_bounds(self, mini_store):
        assert mini_store.get_paragraph("Mira Holloway", 1) is not None
        assert mini_store.get_paragraph("Mira Holloway", 9) is None


class TestSnapshot:
    def test_roundtrip_exact(self, tmp_path, mini_store):
        path = tmp_path / "snapshot.jsonl"
        save_store(mini_store, path)
        reloaded = load_store(path)
        assert reloaded.pages == mini_store.pages
        # a second save of the reloaded store produces identical bytes
        path2 = tmp_path / "snapshot2.jsonl"
        save_store(reloaded, path2)
        assert path.read_bytes() == path2.read_bytes()
