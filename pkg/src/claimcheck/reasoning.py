"""Conflicting-stance rationale generation and the preliminary LLM judgment.

Each claim gets two independent completions (one arguing true, one arguing
false) over the same evidence, then a third completion picks the stance whose
rationale it finds more convincing. Rationales are stored raw; the four analysis
angles shape the prompt, not the data model.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Sequence

from . import prompts
from .claim import Claim, Stance
from .llm import BackendUnavailable, LlmBackend, LlmRequest
from .retrieval import EvidenceSet

logger = logging.getLogger(__name__)

NO_RATIONALE_SENTINEL = "(no rationale produced)"
NO_EVIDENCE_PLACEHOLDER = "(no evidence retrieved)"

_STANCE_WORD = re.compile(r"true|false", re.IGNORECASE)


@dataclass(frozen=True)
class Rationale:
    stance: Stance
    text: str
    source_claim_id: str = ""


@dataclass(frozen=True)
class RationalePair:
    """Both rationales plus the LLM's preliminary stance pick."""

    r_true: Rationale
    r_false: Rationale
    y_llm: Stance
    judgment_parse_failed: bool = False

    def __post_init__(self) -> None:
        if self.r_true.stance is not Stance.TRUE or self.r_false.stance is not Stance.FALSE:
            raise ValueError("rationale pair fields must match their stances")

    def for_stance(self, stance: Stance) -> Rationale:
        return self.r_true if stance is Stance.TRUE else self.r_false


def format_evidence(evidence: EvidenceSet) -> str:
    """Numbered paragraphs in retrieval order, each suffixed with its source title."""
    paragraphs = evidence.paragraphs
    if not paragraphs:
        return NO_EVIDENCE_PLACEHOLDER
    return "\n".join(
        f"{rank}. {para.text} (source: {para.page_title})"
        for rank, para in enumerate(paragraphs, 1)
    )


def build_rationale_prompt(
    claim: Claim,
    stance: Stance,
    evidence: EvidenceSet,
    aspects: Sequence[str] | None = None,
) -> str:
    """Pure function of (claim, stance, evidence); ``aspects`` overrides the four
    default analysis angles for ablation runs."""
    if aspects is None:
        template = prompts.RATIONALE_TEMPLATE
    else:
        template = prompts.RATIONALE_TEMPLATE_PREFIX + "; ".join(aspects) + "."
    return template.format(
        claim=claim.text, stance=stance.word, evidence=format_evidence(evidence)
    )


def _complete_rationale(llm: LlmBackend, request: LlmRequest) -> str:
    for attempt in (1, 2):
        try:
            return llm.complete(request).text
        except BackendUnavailable as exc:
            logger.warning("rationale generation failed (attempt %d): %s", attempt, exc)
    return NO_RATIONALE_SENTINEL


def generate_rationales(
    claim: Claim,
    evidence: EvidenceSet,
    llm: LlmBackend,
    aspects: Sequence[str] | None = None,
) -> tuple[Rationale, Rationale]:
    """Two independent completions, one per stance, no shared conversation state.

    A stance whose generation keeps failing gets the sentinel text; the pipeline
    continues either way.
    """
    texts: dict[Stance, str] = {}
    for stance in (Stance.TRUE, Stance.FALSE):
        request = LlmRequest(
            template_id=prompts.RATIONALE_TEMPLATE_ID,
            prompt=build_rationale_prompt(claim, stance, evidence, aspects=aspects),
        )
        texts[stance] = _complete_rationale(llm, request)
    return (
        Rationale(stance=Stance.TRUE, text=texts[Stance.TRUE], source_claim_id=claim.id),
        Rationale(stance=Stance.FALSE, text=texts[Stance.FALSE], source_claim_id=claim.id),
    )


def parse_stance(text: str) -> Stance | None:
    """First case-insensitive occurrence of "true" or "false" wins."""
    match = _STANCE_WORD.search(text)
    if match is None:
        return None
    return Stance.from_word(match.group(0))


def preliminary_judgment(
    claim: Claim,
    rationales: tuple[Rationale, Rationale],
    llm: LlmBackend,
) -> tuple[Stance, bool]:
    """The LLM's stance pick plus a parse-failure flag.

    When no stance word appears after one retry the conservative default is
    false: fabricating a "true" verdict is the costlier mistake here.
    """
    r_true, r_false = rationales
    if r_true.stance is not Stance.TRUE or r_false.stance is not Stance.FALSE:
        raise ValueError("rationales must be passed as (true, false)")
    request = LlmRequest(
        template_id=prompts.JUDGMENT_TEMPLATE_ID,
        prompt=prompts.JUDGMENT_TEMPLATE.format(
            claim=claim.text, r_true=r_true.text, r_false=r_false.text
        ),
    )
    for attempt in (1, 2):
        try:
            response = llm.complete(request)
        except BackendUnavailable as exc:
            logger.warning("preliminary judgment failed (attempt %d): %s", attempt, exc)
            continue
        stance = parse_stance(response.text)
        if stance is not None:
            return stance, False
        logger.warning("no stance word in judgment output (attempt %d)", attempt)
    return Stance.FALSE, True


def reason_about_claim(
    claim: Claim,
    evidence: EvidenceSet,
    llm: LlmBackend,
    aspects: Sequence[str] | None = None,
) -> RationalePair:
    """Full reasoning stage: both rationales plus the preliminary judgment."""
    r_true, r_false = generate_rationales(claim, evidence, llm, aspects=aspects)
    y_llm, parse_failed = preliminary_judgment(claim, (r_true, r_false), llm)
    return RationalePair(
        r_true=r_true, r_false=r_false, y_llm=y_llm, judgment_parse_failed=parse_failed
    )
