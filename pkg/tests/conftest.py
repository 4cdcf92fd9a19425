"""Shared fixtures: tiny corpora, a scriptable offline LLM, and fixture paths."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # expose tests/oracles.py as `oracles`

from claimcheck.corpus import CorpusStore, ingest_corpus
from claimcheck.llm import BackendUnavailable, LlmRequest, LlmResponse
from claimcheck.retrieval import Bm25Index, build_index

FIXTURES = Path(__file__).parent / "fixtures"


@dataclass
class FakeLlm:
    """Offline backend scripted per template id.

    ``responses`` maps a template id to a list of texts consumed in call order
    (the last entry repeats once exhausted). Every request is recorded on
    ``requests`` so tests can assert on rendered prompts.
    """

    responses: dict[str, list[str]] = field(default_factory=dict)
    requests: list[LlmRequest] = field(default_factory=list)
    fail_templates: set[str] = field(default_factory=set)

    def complete(self, request: LlmRequest) -> LlmResponse:
        self.requests.append(request)
        if request.template_id in self.fail_templates:
            raise BackendUnavailable(f"scripted failure for {request.template_id}")
        queue = self.responses.get(request.template_id)
        if not queue:
            raise AssertionError(f"FakeLlm has no script for template {request.template_id!r}")
        text = queue.pop(0) if len(queue) > 1 else queue[0]
        return LlmResponse(text=text, provenance="live")

    def prompts_for(self, template_id: str) -> list[str]:
        return [r.prompt for r in self.requests if r.template_id == template_id]


@pytest.fixture
def fake_llm() -> FakeLlm:
    return FakeLlm()


MINI_CORPUS_RECORDS = [
    {
        "title": "Harbor Lights",
        "url": "https://example.org/wiki/Harbor_Lights",
        "paragraphs": [
            "Harbor Lights is a 2019 drama film directed by Mira Holloway.",
            "The film premiered at Copenhagen Film Week in October 2019.",
            "Principal photography took place in Copenhagen over eleven weeks.",
        ],
    },
    {
        "title": "Mira Holloway",
        "url": "https://example.org/wiki/Mira_Holloway",
        "paragraphs": [
            "Mira Holloway is a Danish film director born in Aarhus in 1978.",
            "Holloway studied documentary production before moving to features.",
        ],
    },
    {
        "title": "Port Ellery",
        "url": "https://example.org/wiki/Port_Ellery",
        "paragraphs": [
            "Port Ellery is a coastal city in New Zealand founded in 1841.",
            "The economy of Port Ellery is centred on fishing and shipbuilding.",
        ],
    },
]


@pytest.fixture
def mini_store() -> CorpusStore:
    import json

    lines = [json.dumps(record) for record in MINI_CORPUS_RECORDS]
    return ingest_corpus(lines)


@pytest.fixture
def mini_index(mini_store: CorpusStore) -> Bm25Index:
    return build_index(mini_store.all_paragraphs())
