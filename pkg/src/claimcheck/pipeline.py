"""End-to-end verification of a single claim, honoring setting and ablation flags."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

from .claim import Claim, Stance
from .corpus import CorpusStore
from .disambiguation import (
    DisambiguationPlan,
    EntitySet,
    execute_plan,
    extract_entities,
    generate_plan,
    merge_entities,
)
from .encoders import EmbeddingProvider
from .judge import JudgeModel, Verdict, predict, verdict_without_judge
from .llm import LlmBackend
from .reasoning import RationalePair, Rationale, format_evidence, reason_about_claim
from .retrieval import (
    Bm25Index,
    DEFAULT_PER_ENTITY,
    EvidenceBlock,
    EvidenceParagraph,
    EvidenceSet,
    gather_evidence,
    top_k,
)

logger = logging.getLogger(__name__)

DEFAULT_GLOBAL_TOP_K = 10


@dataclass
class RunConfig:
    """Experiment knobs: evidence setting, stage toggles, retrieval parameters.

    ``setting="gold"`` uses the claim's gold evidence as the evidence set and
    never touches the retrieval index. Each ablation flag turns one stage off:
    disabled ambiguity elimination skips the plan, disabled entity retrieval
    queries BM25 with the claim text directly, disabled summary selection drops
    the first-two-paragraphs rule, disabled LLM reasoning feeds raw evidence
    into the judge branches, and a disabled judge returns the preliminary LLM
    label as final.
    """

    setting: str = "open"
    ambiguity_elimination: bool = True
    entity_retrieval: bool = True
    summary_selection: bool = True
    llm_reasoning: bool = True
    slm_judge: bool = True
    per_entity: int = DEFAULT_PER_ENTITY
    global_top_k: int = DEFAULT_GLOBAL_TOP_K
    llm_mode: str = "replay"
    seed: int = 0
    # overrides the four default analysis angles in the rationale prompt; no
    # dedicated code path per variant
    aspects: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.setting not in ("open", "gold"):
            raise ValueError(f"setting must be 'open' or 'gold', got {self.setting!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Resources:
    """Everything a verification run may need; unused pieces can stay None."""

    store: CorpusStore
    llm: LlmBackend
    index: Bm25Index | None = None
    judge: JudgeModel | None = None
    provider: EmbeddingProvider | None = None


@dataclass
class VerificationResult:
    claim: Claim
    verdict: Verdict
    pair: RationalePair
    evidence: EvidenceSet
    entities: EntitySet
    plan: DisambiguationPlan = field(default_factory=DisambiguationPlan)


def gold_evidence_set(claim: Claim, store: CorpusStore) -> EvidenceSet:
    """Gold references materialized from the corpus, grouped per page in order.

    References that do not resolve to a stored paragraph are logged and skipped.
    """
    evidence = EvidenceSet()
    blocks: dict[str, EvidenceBlock] = {}
    for title, index in claim.gold_evidence:
        page = store.lookup(title)
        para = store.get_paragraph(title, index)
        if page is None or para is None:
            logger.warning("gold evidence (%r, %d) not found in corpus", title, index)
            continue
        block = blocks.get(page.title)
        if block is None:
            block = EvidenceBlock(entity=page.title)
            blocks[page.title] = block
            evidence.blocks.append(block)
        block.paragraphs.append(
            EvidenceParagraph(page_title=page.title, url=page.url, index=para.index, text=para.text)
        )
    return evidence


def _claim_query_evidence(
    claim: Claim, answers: list[str], index: Bm25Index, k: int
) -> EvidenceSet:
    """Entity-retrieval-ablated evidence: corpus-wide BM25 with the claim as query.

    Plan answers, when present, are appended to the query so ambiguity
    elimination still informs retrieval.
    """
    query = " ".join([claim.text, *answers])
    block = EvidenceBlock(entity="")
    for pid, _score in top_k(index, query, k):
        para = index.paragraphs[pid]
        block.paragraphs.append(
            EvidenceParagraph(page_title=para.page_title, url="", index=para.index, text=para.text)
        )
    evidence = EvidenceSet()
    evidence.blocks.append(block)
    return evidence


def _reasoning_free_pair(claim: Claim, evidence: EvidenceSet) -> RationalePair:
    """LLM-reasoning-ablated pair: both branches carry the raw evidence text and
    the preliminary label defaults to false, fixing the branch order."""
    text = format_evidence(evidence)
    return RationalePair(
        r_true=Rationale(stance=Stance.TRUE, text=text, source_claim_id=claim.id),
        r_false=Rationale(stance=Stance.FALSE, text=text, source_claim_id=claim.id),
        y_llm=Stance.FALSE,
    )


def verify_claim(claim: Claim, resources: Resources, config: RunConfig) -> VerificationResult:
    """Run the stage graph for one claim and return its verdict plus intermediates."""
    plan = DisambiguationPlan()
    entities = EntitySet()
    answers: list[str] = []

    if config.setting == "gold":
        evidence = gold_evidence_set(claim, resources.store)
    else:
        if resources.index is None:
            raise ValueError("open setting requires a retrieval index")
        if config.ambiguity_elimination:
            plan = generate_plan(claim, resources.llm)
            answers = execute_plan(plan, resources.llm, resources.store, resources.index)
        if config.entity_retrieval:
            explicit = extract_entities(claim, resources.llm)
            entities = merge_entities(explicit, answers)
            evidence = gather_evidence(
                entities,
                resources.store,
                claim,
                config.per_entity,
                resources.index,
                use_summary=config.summary_selection,
            )
        else:
            evidence = _claim_query_evidence(claim, answers, resources.index, config.global_top_k)

    if evidence.is_empty():
        logger.info("claim %r: empty evidence set; reasoning proceeds without evidence", claim.id)

    if config.llm_reasoning:
        pair = reason_about_claim(claim, evidence, resources.llm, aspects=config.aspects)
    else:
        pair = _reasoning_free_pair(claim, evidence)

    sources = evidence.sources()
    if config.slm_judge:
        if resources.judge is None or resources.provider is None:
            raise ValueError("judge stage requires a model and an embedding provider")
        verdict = predict(resources.judge, claim, pair, resources.provider, sources)
    else:
        verdict = verdict_without_judge(pair, sources)

    return VerificationResult(
        claim=claim, verdict=verdict, pair=pair, evidence=evidence, entities=entities, plan=plan
    )
