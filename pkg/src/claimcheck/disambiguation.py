"""Ambiguity elimination: plan generation, strictly sequential execution, entity extraction.

The LLM output grammar is rigid so parsing stays testable:

* plan: one ``STEP <i>: <question>`` line per step, numbered 1..n in order, or the
  single sentinel line ``NO_AMBIGUITY``; surrounding prose is tolerated.
* entities: one ``ENTITIES: e1 | e2 | ...`` line.
* questions may reference strictly earlier answers with ``{A<i>}`` placeholders.

Anything else is rejected, retried once, and then degraded (empty plan/set) so a
weak disambiguation never aborts verification.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from . import prompts
from .claim import Claim
from .corpus import CorpusStore, normalize_title
from .llm import BackendUnavailable, LlmBackend, LlmRequest
from .retrieval import Bm25Index, top_k

logger = logging.getLogger(__name__)

STEP_CONTEXT_K = 3

_STEP_LINE = re.compile(r"^STEP\s+(\d+)\s*:\s*(.+?)\s*$")
_PLACEHOLDER = re.compile(r"\{A(\d+)\}")


@dataclass
class PlanStep:
    question: str
    answer: str | None = None


@dataclass
class DisambiguationPlan:
    """Ordered clarification steps; execution order is list order, always."""

    steps: list[PlanStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class EntitySet:
    """Deduplicated entity names: explicit mentions first, then resolved answers."""

    entities: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entities)


def parse_plan(text: str) -> DisambiguationPlan | None:
    """Parse the plan grammar; None means unparseable (caller retries).

    Steps must be numbered 1..n in line order and placeholders may only point at
    strictly earlier steps. The sentinel only counts when no step lines are present.
    """
    steps: list[tuple[int, str]] = []
    saw_sentinel = False
    for line in text.splitlines():
        stripped = line.strip()
        if stripped == prompts.NO_AMBIGUITY_SENTINEL:
            saw_sentinel = True
            continue
        match = _STEP_LINE.match(stripped)
        if match:
            steps.append((int(match.group(1)), match.group(2)))
    if not steps:
        return DisambiguationPlan() if saw_sentinel else None
    if [number for number, _ in steps] != list(range(1, len(steps) + 1)):
        return None
    for number, question in steps:
        refs = [int(m) for m in _PLACEHOLDER.findall(question)]
        if any(ref < 1 or ref >= number for ref in refs):
            return None
    return DisambiguationPlan(steps=[PlanStep(question=q) for _, q in steps])


def parse_entities(text: str) -> list[str] | None:
    """Entity names from the first ``ENTITIES:`` line; None when the line is absent."""
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith(prompts.ENTITY_LINE_PREFIX):
            payload = stripped[len(prompts.ENTITY_LINE_PREFIX):]
            return [part.strip() for part in payload.split("|") if part.strip()]
    return None


def _dedupe(names: list[str]) -> tuple[str, ...]:
    seen: set[str] = set()
    out: list[str] = []
    for name in names:
        key = normalize_title(name)
        if not key or key in seen:
            continue
        seen.add(key)
        out.append(name)
    return tuple(out)


def _complete_with_retry(llm: LlmBackend, request: LlmRequest, parse, what: str):
    """One parse-driven retry; backend unavailability degrades the same way."""
    for attempt in (1, 2):
        try:
            response = llm.complete(request)
        except BackendUnavailable as exc:
            logger.warning("%s: backend unavailable (attempt %d): %s", what, attempt, exc)
            continue
        parsed = parse(response.text)
        if parsed is not None:
            return parsed
        logger.warning("%s: unparseable LLM output (attempt %d)", what, attempt)
    return None


def generate_plan(claim: Claim, llm: LlmBackend) -> DisambiguationPlan:
    """Ask the LLM for clarification steps; degrade to an empty plan on failure."""
    request = LlmRequest(
        template_id=prompts.PLAN_TEMPLATE_ID,
        prompt=prompts.PLAN_TEMPLATE.format(claim=claim.text),
    )
    plan = _complete_with_retry(llm, request, parse_plan, "plan generation")
    if plan is None:
        logger.warning("plan generation failed for claim %r; proceeding without a plan", claim.id)
        return DisambiguationPlan()
    return plan


def materialize_question(question: str, answers_by_step: list[str]) -> str:
    """Substitute earlier answers into {A<i>} placeholders.

    An empty answer leaves its placeholder text intact (and logs), so a failed
    step degrades the question instead of erasing part of it.
    """

    def replace(match: re.Match[str]) -> str:
        ref = int(match.group(1))
        if 1 <= ref <= len(answers_by_step) and answers_by_step[ref - 1]:
            return answers_by_step[ref - 1]
        logger.warning("placeholder {A%d} unresolved; leaving it in the question", ref)
        return match.group(0)

    return _PLACEHOLDER.sub(replace, question)


def _format_context(index: Bm25Index, question: str) -> str:
    hits = top_k(index, question, STEP_CONTEXT_K)
    if not hits:
        return "(no context retrieved)"
    lines = []
    for rank, (pid, _score) in enumerate(hits, 1):
        para = index.paragraphs[pid]
        lines.append(f"[{rank}] {para.text} (source: {para.page_title})")
    return "\n".join(lines)


def execute_plan(
    plan: DisambiguationPlan,
    llm: LlmBackend,
    store: CorpusStore,
    index: Bm25Index,
) -> list[str]:
    """Run steps in strict sequence, answering each against its top-3 BM25 context.

    Returns the non-empty answers in step order. A failed step yields an empty
    answer and execution continues.
    """
    answers_by_step: list[str] = []
    for step in plan.steps:
        question = materialize_question(step.question, answers_by_step)
        request = LlmRequest(
            template_id=prompts.STEP_TEMPLATE_ID,
            prompt=prompts.STEP_TEMPLATE.format(
                context=_format_context(index, question), question=question
            ),
        )
        try:
            answer = llm.complete(request).text.strip()
        except BackendUnavailable as exc:
            logger.warning("step %r failed: %s", question, exc)
            answer = ""
        step.answer = answer
        answers_by_step.append(answer)
    return [answer for answer in answers_by_step if answer]


def extract_entities(claim: Claim, llm: LlmBackend) -> EntitySet:
    """Explicitly named entities, deduplicated after normalization."""
    request = LlmRequest(
        template_id=prompts.ENTITY_TEMPLATE_ID,
        prompt=prompts.ENTITY_TEMPLATE.format(claim=claim.text),
    )
    names = _complete_with_retry(llm, request, parse_entities, "entity extraction")
    if names is None:
        logger.warning("entity extraction failed for claim %r; empty entity set", claim.id)
        return EntitySet()
    return EntitySet(entities=_dedupe(names))


def merge_entities(explicit: EntitySet, resolved: list[str]) -> EntitySet:
    """Explicit entities first, then resolved answers, deduplicated after normalization."""
    return EntitySet(entities=_dedupe(list(explicit.entities) + resolved))


def resolve_entities(
    claim: Claim,
    llm: LlmBackend,
    store: CorpusStore,
    index: Bm25Index,
) -> EntitySet:
    """Union of explicit entities and plan answers, explicit first, deduplicated."""
    explicit = extract_entities(claim, llm)
    plan = generate_plan(claim, llm)
    resolved = execute_plan(plan, llm, store, index)
    return merge_entities(explicit, resolved)
