"""Rationale prompts, stance parsing, and the preliminary judgment."""

from __future__ import annotations

import pytest

from claimcheck import prompts
from claimcheck.claim import Claim, Stance
from claimcheck.corpus import Page, Paragraph
from claimcheck.reasoning import (
    NO_EVIDENCE_PLACEHOLDER,
    NO_RATIONALE_SENTINEL,
    Rationale,
    RationalePair,
    build_rationale_prompt,
    format_evidence,
    generate_rationales,
    parse_stance,
    preliminary_judgment,
    reason_about_claim,
)
from claimcheck.retrieval import EvidenceBlock, EvidenceParagraph, EvidenceSet

from conftest import FakeLlm

CLAIM = Claim(text="Harbor Lights was directed by Mira Holloway.", id="c1")

# The exact instruction wording the rationale prompt must carry.
RATIONALE_TEMPLATE_EXPECTED = (
    "Analyze why the following claim {claim} is {stance} based on the given "
    "evidence {evidence}. Provide a clear and detailed explanation that focuses on: "
    "Direct evidence analysis; Semantic features and relationships; Linguistic "
    "patterns and connections; Logical reasoning strictly from the evidence."
)

JUDGMENT_TEMPLATE_EXPECTED = (
    "Given claim {claim} and the following two claim rationales: "
    "(1) true:{r_true};(2) false:{r_false}, is this claim true or false?"
)


def two_paragraph_evidence() -> EvidenceSet:
    ev = EvidenceSet()
    block = EvidenceBlock(entity="Harbor Lights")
    block.paragraphs = [
        EvidenceParagraph(page_title="Harbor Lights", url="u1", index=0, text="First paragraph."),
        EvidenceParagraph(page_title="Harbor Lights", url="u1", index=1, text="Second paragraph."),
    ]
    ev.blocks.append(block)
    return ev


class TestTemplates:
    def test_rationale_template_verbatim(self):
        assert prompts.RATIONALE_TEMPLATE == RATIONALE_TEMPLATE_EXPECTED

    def test_judgment_template_verbatim(self):
        assert prompts.JUDGMENT_TEMPLATE == JUDGMENT_TEMPLATE_EXPECTED


class TestBuildRationalePrompt:
    def test_true_stance_wording(self):
        prompt = build_rationale_prompt(CLAIM, Stance.TRUE, EvidenceSet())
        assert " is true based on the given evidence" in prompt

    def test_false_stance_wording(self):
        prompt = build_rationale_prompt(CLAIM, Stance.FALSE, EvidenceSet())
        assert " is false based on the given evidence" in prompt

    def test_empty_evidence_placeholder(self):
        prompt = build_rationale_prompt(CLAIM, Stance.TRUE, EvidenceSet())
        assert NO_EVIDENCE_PLACEHOLDER in prompt

    def test_paragraphs_numbered_in_retrieval_order(self):
        text = format_evidence(two_paragraph_evidence())
        assert text.splitlines() == [
            "1. First paragraph. (source: Harbor Lights)",
            "2. Second paragraph. (source: Harbor Lights)",
        ]

    def test_pure_function(self):
        ev = two_paragraph_evidence()
        assert build_rationale_prompt(CLAIM, Stance.TRUE, ev) == build_rationale_prompt(
            CLAIM, Stance.TRUE, ev
        )

    def test_aspect_override_changes_focus_list(self):
        prompt = build_rationale_prompt(CLAIM, Stance.TRUE, EvidenceSet(), aspects=("Only one angle",))
        assert prompt.endswith("focuses on: Only one angle.")


class TestGenerateRationales:
    def test_mocked_stances(self, fake_llm):
        fake_llm.responses[prompts.RATIONALE_TEMPLATE_ID] = [
            "argues true side",
            "argues false side",
        ]
        r_true, r_false = generate_rationales(CLAIM, EvidenceSet(), fake_llm)
        assert r_true.stance is Stance.TRUE and "true" in r_true.text
        assert r_false.stance is Stance.FALSE and "false" in r_false.text
        # two independent calls, true stance first
        sent = fake_llm.prompts_for(prompts.RATIONALE_TEMPLATE_ID)
        assert len(sent) == 2
        assert " is true based" in sent[0] and " is false based" in sent[1]

    def test_both_failures_yield_sentinels(self, fake_llm):
        fake_llm.fail_templates.add(prompts.RATIONALE_TEMPLATE_ID)
        r_true, r_false = generate_rationales(CLAIM, EvidenceSet(), fake_llm)
        assert r_true.text == NO_RATIONALE_SENTINEL
        assert r_false.text == NO_RATIONALE_SENTINEL

    def test_pair_invariant_enforced(self):
        with pytest.raises(ValueError):
            RationalePair(
                r_true=Rationale(stance=Stance.FALSE, text="x"),
                r_false=Rationale(stance=Stance.FALSE, text="y"),
                y_llm=Stance.FALSE,
            )


class TestParseStance:
    def test_first_occurrence_false(self):
        assert parse_stance("The claim is FALSE because...") is Stance.FALSE

    def test_plain_true(self):
        assert parse_stance("true") is Stance.TRUE

    def test_first_occurrence_wins(self):
        assert parse_stance("false, not true") is Stance.FALSE
        assert parse_stance("it is True rather than false") is Stance.TRUE

    def test_no_token(self):
        assert parse_stance("uncertain") is None


def make_pair(y_llm: Stance = Stance.TRUE) -> tuple[Rationale, Rationale]:
    return (
        Rationale(stance=Stance.TRUE, text="supports"),
        Rationale(stance=Stance.FALSE, text="refutes"),
    )


class TestPreliminaryJudgment:
    def test_parses_false(self, fake_llm):
        fake_llm.responses[prompts.JUDGMENT_TEMPLATE_ID] = ["The claim is FALSE because..."]
        stance, failed = preliminary_judgment(CLAIM, make_pair(), fake_llm)
        assert stance is Stance.FALSE and not failed

    def test_parses_true(self, fake_llm):
        fake_llm.responses[prompts.JUDGMENT_TEMPLATE_ID] = ["true"]
        stance, failed = preliminary_judgment(CLAIM, make_pair(), fake_llm)
        assert stance is Stance.TRUE and not failed

    def test_fallback_after_two_unparseable(self, fake_llm):
        fake_llm.responses[prompts.JUDGMENT_TEMPLATE_ID] = ["uncertain", "uncertain"]
        stance, failed = preliminary_judgment(CLAIM, make_pair(), fake_llm)
        assert stance is Stance.FALSE and failed
        assert len(fake_llm.prompts_for(prompts.JUDGMENT_TEMPLATE_ID)) == 2

    def test_prompt_embeds_both_rationales(self, fake_llm):
        fake_llm.responses[prompts.JUDGMENT_TEMPLATE_ID] = ["true"]
        preliminary_judgment(CLAIM, make_pair(), fake_llm)
        prompt = fake_llm.prompts_for(prompts.JUDGMENT_TEMPLATE_ID)[0]
        assert "(1) true:supports;(2) false:refutes" in prompt

    def test_wrong_order_rejected(self, fake_llm):
        r_true, r_false = make_pair()
        with pytest.raises(ValueError):
            preliminary_judgment(CLAIM, (r_false, r_true), fake_llm)


class TestReasonAboutClaim:
    def test_full_stage(self, fake_llm):
        fake_llm.responses[prompts.RATIONALE_TEMPLATE_ID] = ["yes side", "no side"]
        fake_llm.responses[prompts.JUDGMENT_TEMPLATE_ID] = ["I judge this true."]
        pair = reason_about_claim(CLAIM, two_paragraph_evidence(), fake_llm)
        assert pair.y_llm is Stance.TRUE
        assert pair.r_true.source_claim_id == CLAIM.id
        assert not pair.judgment_parse_failed

    def test_call_order_independence_under_scripted_cache(self):
        # swapping generation order changes nothing because each stance request
        # is keyed by its own prompt
        def run(order: tuple[Stance, Stance]) -> tuple[str, str]:
            llm = FakeLlm()
            llm.responses[prompts.RATIONALE_TEMPLATE_ID] = ["for true", "for false"]
            # emulate a digest-keyed cache: map the prompt stance wording
            texts = {}
            for stance in order:
                prompt = build_rationale_prompt(CLAIM, stance, EvidenceSet())
                key = "true" if " is true based" in prompt else "false"
                texts[key] = f"rationale for {key}"
            return texts["true"], texts["false"]

        assert run((Stance.TRUE, Stance.FALSE)) == run((Stance.FALSE, Stance.TRUE))
