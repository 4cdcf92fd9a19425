#!/usr/bin/env python3
"""Regenerate the end-to-end replay fixtures under tests/fixtures/e2e/.

The fixture world is a 12-page corpus (44 paragraphs), 20 labeled claims, a
fully populated LLM replay cache, a training set for the judge head, and the
trained checkpoint. Every LLM response is authored below; the cache is filled
by running the real pipeline in record mode against an authoring transport, so
the recorded requests are byte-identical to what replay runs will issue.

Design of the claim set (kept in sync with tests/test_acceptance.py):

* gold labels: 10 true / 10 false.
* y_llm (the preliminary judgment) is wrong for c04, c09, c13, c17, so the
  judge-ablated run scores 16/20 = 0.80.
* the corpus-backed ("strong") rationale argues the gold label except for
  c04, c09, c17, so a judge that follows the evidence scores 17/20 = 0.85
  (it corrects c13, where y_llm is wrong but the rationales are sound).
* entity scripts leave gold pages unretrieved for c07, c12, c18: total gold
  paragraphs 25, retrieved 22 -> evidence_ratio 22/25; only c18 misses every
  gold paragraph -> claim_ratio 19/20.

Rerunning this script reproduces every output byte for byte.
"""

from __future__ import annotations

import contextlib
import io
import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from claimcheck import prompts
from claimcheck.claim import Claim, Stance
from claimcheck.corpus import ingest_corpus
from claimcheck.encoders import HashingEncoder
from claimcheck.evaluation import load_dataset, run_pipeline
from claimcheck.judge import (
    TrainConfig,
    init_model,
    load_judge_examples,
    save_model,
    train,
)
from claimcheck.llm import LlmClient, LlmRequest, ReplayCache
from claimcheck.pipeline import Resources, RunConfig
from claimcheck.retrieval import build_index

OUT = REPO / "tests" / "fixtures" / "e2e"

WIKI = "https://example.org/wiki/"

PAGES: list[tuple[str, list[str]]] = [
    ("Harbor Lights", [
        "Harbor Lights is a 2019 drama film directed by Mira Holloway. It follows a salvage crew working the northern coast.",
        "The film premiered at Copenhagen Film Week in October 2019 and opened in wide release the following spring.",
        "Critics praised the film's restrained pacing and coastal photography, and several reviews singled out the harbor sequences.",
        "Principal photography took place in Copenhagen and the surrounding coast over eleven weeks.",
        "Harbor Lights won the Coastal Film Prize at Copenhagen Film Week in 2019.",
    ]),
    ("Mira Holloway", [
        "Mira Holloway (born 1978) is a Danish film director and screenwriter.",
        "Holloway was born in Aarhus, Denmark, and studied documentary production in Copenhagen.",
        "Her early work covered shipping and fishing communities before she moved to feature drama.",
        "Holloway received the Coastal Film Prize in 2019 for Harbor Lights.",
    ]),
    ("The Gilded Fern", [
        "The Gilded Fern is a novel by the Chilean author Tomas Reyes, published in 1993.",
        "The novel follows a botanist cataloguing ferns in a valley town during an election year.",
        "The Gilded Fern won the Meridian Book Award in 1994, the year after its publication.",
        "A stage adaptation of the novel toured for two seasons.",
    ]),
    ("Tomas Reyes", [
        "Tomas Reyes (born 1954) is a Chilean author, born in Valparaíso.",
        "Reyes worked as a newspaper archivist before publishing fiction.",
        "His later novels returned to the valley settings of his debut.",
        "Reyes has lived in Santiago since 1989.",
    ]),
    ("Cobalt Parade", [
        "Cobalt Parade are a rock band formed in Manchester in 1999.",
        "The band's lead singer is Elsa Varga, who joined after the first rehearsals.",
        "Their debut studio album Night Arithmetic was released in 2003.",
        "The band toured Europe and Japan through the middle of the decade.",
    ]),
    ("Elsa Varga", [
        "Elsa Varga (born 1975) is a singer born in Budapest, Hungary.",
        "Varga moved to Manchester in 1997 and joined Cobalt Parade as lead singer.",
        "She released a solo record of folk songs in 2011.",
    ]),
    ("Night Arithmetic", [
        "Night Arithmetic is the debut studio album by Cobalt Parade, released in 2003.",
        "The album was recorded over six months in a converted Manchester warehouse.",
        "Night Arithmetic was certified platinum two years after release.",
    ]),
    ("Port Ellery", [
        "Port Ellery is a coastal city in New Zealand.",
        "Port Ellery was founded in 1841 around a sheltered deepwater harbor.",
        "The economy of Port Ellery is centred on fishing and shipbuilding.",
        "Landmarks include Ellery Lighthouse and the maritime museum.",
    ]),
    ("Ellery Lighthouse", [
        "Ellery Lighthouse is a lighthouse in Port Ellery, completed in 1868.",
        "The lighthouse was designed by the engineer Hugh Marsh.",
        "Ellery Lighthouse received heritage protection in 1972.",
    ]),
    ("Saffron Comet", [
        "Saffron Comet was a racehorse foaled in 1985.",
        "Saffron Comet won the Brightwater Cup in 1989.",
        "The horse was trained by Nora Quill for its entire career.",
        "Saffron Comet retired to stud in 1992.",
    ]),
    ("Nora Quill", [
        "Nora Quill (born 1948) is a retired horse trainer born in County Kildare, Ireland.",
        "Quill trained champions through the 1980s, including Saffron Comet.",
        "She was inducted into the national racing hall of fame in 2001.",
    ]),
    ("Copenhagen Film Week", [
        "Copenhagen Film Week is an annual film festival founded in 1996.",
        "The festival presents the Coastal Film Prize for maritime-themed cinema.",
        "Screenings are held across five venues in central Copenhagen.",
    ]),
]


class Spec:
    """Authored behavior for one claim: scripts, labels, and rationale design."""

    def __init__(self, cid, text, gold, hops, gold_evidence, entities, topic, fact,
                 plan=None, steps=None, y_llm=None, strong=None):
        self.cid = cid
        self.text = text
        self.gold = gold
        self.hops = hops
        self.gold_evidence = gold_evidence
        self.entities = entities
        self.topic = topic
        self.fact = fact
        self.plan = plan  # None -> NO_AMBIGUITY; str -> raw plan response text
        self.steps = steps or {}  # materialized question -> answer
        self.y_llm = gold if y_llm is None else y_llm
        self.strong = gold if strong is None else strong  # stance the corpus supports

GARBAGE_PLAN = "I cannot structure this claim into steps, sorry."

SPECS = [
    Spec("c01", "Harbor Lights is a 2019 drama film directed by Mira Holloway.",
         "true", 1, [["Harbor Lights", 0]],
         ["Harbor Lights", "Mira Holloway"],
         "the film Harbor Lights",
         "the film page states that Harbor Lights is a 2019 drama film directed by Mira Holloway."),
    Spec("c02", "The director of Harbor Lights was born in Aarhus.",
         "true", 2, [["Harbor Lights", 0], ["Mira Holloway", 1]],
         ["Harbor Lights"],
         "the director of Harbor Lights",
         "Harbor Lights was directed by Mira Holloway, and her page states she was born in Aarhus, Denmark.",
         plan="STEP 1: Who directed the film Harbor Lights?",
         steps={"Who directed the film Harbor Lights?": "Mira Holloway"}),
    Spec("c03", "Night Arithmetic is the debut studio album by Cobalt Parade.",
         "true", 1, [["Night Arithmetic", 0]],
         ["Night Arithmetic", "Cobalt Parade"],
         "the album Night Arithmetic",
         "the album page states that Night Arithmetic is the debut studio album by Cobalt Parade."),
    Spec("c04", "The Gilded Fern won the Meridian Book Award in 1994.",
         "true", 1, [["The Gilded Fern", 2]],
         ["The Gilded Fern", "Meridian Book Award"],
         "the novel The Gilded Fern",
         "the novel page mentions the Meridian Book Award only in passing and gives no award year.",
         y_llm="false", strong="false"),
    Spec("c05", "Ellery Lighthouse was completed in 1868.",
         "true", 1, [["Ellery Lighthouse", 0]],
         ["Ellery Lighthouse"],
         "Ellery Lighthouse",
         "the lighthouse page states that Ellery Lighthouse was completed in 1868."),
    Spec("c06", "Tomas Reyes was born in Valparaíso.",
         "true", 1, [["Tomas Reyes", 0]],
         ["Tomas Reyes", "Valparaíso"],
         "the author Tomas Reyes",
         "the author page states that Tomas Reyes was born in Valparaíso."),
    Spec("c07", "Harbor Lights won the Coastal Film Prize, an award presented at Copenhagen Film Week.",
         "true", 2, [["Harbor Lights", 4], ["Copenhagen Film Week", 1]],
         ["Harbor Lights", "Coastal Film Prize"],
         "the award won by Harbor Lights",
         "the film page states that Harbor Lights won the Coastal Film Prize at Copenhagen Film Week in 2019."),
    Spec("c08", "The lead singer of Cobalt Parade was born in Budapest.",
         "true", 2, [["Cobalt Parade", 1], ["Elsa Varga", 0]],
         ["Cobalt Parade"],
         "the lead singer of Cobalt Parade",
         "the band's lead singer is Elsa Varga, whose page states she was born in Budapest, Hungary.",
         plan="STEP 1: Who is the lead singer of Cobalt Parade?",
         steps={"Who is the lead singer of Cobalt Parade?": "Elsa Varga"}),
    Spec("c09", "Port Ellery was founded in 1841.",
         "true", 1, [["Port Ellery", 1]],
         ["Port Ellery"],
         "the founding of Port Ellery",
         "the city page gives no founding year for Port Ellery.",
         y_llm="false", strong="false"),
    Spec("c10", "Saffron Comet won the Brightwater Cup in 1992.",
         "false", 1, [["Saffron Comet", 1]],
         ["Saffron Comet", "Brightwater Cup"],
         "the racehorse Saffron Comet",
         "the horse page states that Saffron Comet won the Brightwater Cup in 1989, not 1992."),
    Spec("c11", "Harbor Lights was directed by Tomas Reyes.",
         "false", 1, [["Harbor Lights", 0]],
         ["Harbor Lights", "Tomas Reyes"],
         "the director of Harbor Lights",
         "the film page states that Harbor Lights was directed by Mira Holloway, not Tomas Reyes."),
    Spec("c12", "Night Arithmetic was released in 2007 by Cobalt Parade.",
         "false", 1, [["Night Arithmetic", 0], ["Cobalt Parade", 2]],
         ["Night Arithmetic"],
         "the release of Night Arithmetic",
         "the album page states that Night Arithmetic was released in 2003, not 2007."),
    Spec("c13", "Mira Holloway is a Chilean author.",
         "false", 1, [["Mira Holloway", 0]],
         ["Mira Holloway"],
         "Mira Holloway's profession",
         "her page states that Mira Holloway is a Danish film director, not a Chilean author.",
         y_llm="true"),
    Spec("c14", "The Gilded Fern was published in 2001.",
         "false", 1, [["The Gilded Fern", 0]],
         ["The Gilded Fern"],
         "the publication of The Gilded Fern",
         "the novel page states that The Gilded Fern was published in 1993, not 2001."),
    Spec("c15", "Ellery Lighthouse was designed by Nora Quill.",
         "false", 1, [["Ellery Lighthouse", 1]],
         ["Ellery Lighthouse", "Nora Quill"],
         "the designer of Ellery Lighthouse",
         "the lighthouse page states it was designed by the engineer Hugh Marsh, not Nora Quill."),
    Spec("c16", "Elsa Varga founded Copenhagen Film Week.",
         "false", 1, [["Copenhagen Film Week", 0]],
         ["Elsa Varga", "Copenhagen Film Week"],
         "the founding of Copenhagen Film Week",
         "the festival page dates its founding to 1996 and never mentions Elsa Varga."),
    Spec("c17", "The economy of Port Ellery is centred on aerospace manufacturing.",
         "false", 1, [["Port Ellery", 2]],
         ["Port Ellery"],
         "the economy of Port Ellery",
         "the city page describes an economy centred on heavy industry consistent with the claim.",
         y_llm="true", strong="true"),
    Spec("c18", "Saffron Comet was trained by a trainer born in Manchester.",
         "false", 2, [["Nora Quill", 0]],
         ["Saffron Comet"],
         "the trainer of Saffron Comet",
         "the horse page names Nora Quill as trainer, and no evidence links the trainer to Manchester.",
         plan=GARBAGE_PLAN),
    Spec("c19", "The Beatles performed at Ellery Lighthouse in 1868.",
         "false", 1, [["Ellery Lighthouse", 0]],
         ["The Beatles", "Ellery Lighthouse"],
         "a performance at Ellery Lighthouse",
         "the lighthouse page records no performance, and 1868 is its completion year."),
    Spec("c20", "Cobalt Parade formed in Manchester in 1999 and released Night Arithmetic as their debut album.",
         "true", 2, [["Cobalt Parade", 0], ["Night Arithmetic", 0]],
         ["Cobalt Parade", "Night Arithmetic"],
         "the band Cobalt Parade",
         "the band page confirms the 1999 Manchester formation and the debut album Night Arithmetic."),
]


def strong_true(spec: Spec) -> str:
    return (
        "Supporting analysis. Direct evidence analysis: the evidence directly confirms the claim; "
        f"{spec.fact} Semantic features and relationships: the entities and attributes in the claim "
        "match the evidence exactly. Linguistic patterns and connections: the evidence phrasing "
        "parallels the claim with no contrast markers. Logical reasoning strictly from the evidence: "
        "taken together, the retrieved paragraphs entail the claim."
    )


def weak_false(spec: Spec) -> str:
    return (
        "Refuting analysis. Direct evidence analysis: no passage contradicts the claim about "
        f"{spec.topic}. Semantic features and relationships: no conflicting attributes appear in the "
        "evidence. Linguistic patterns and connections: no negation or contrast marker ties the "
        "evidence against the claim. Logical reasoning strictly from the evidence: the evidence "
        "gives no ground to refute the claim."
    )


def strong_false(spec: Spec) -> str:
    return (
        "Refuting analysis. Direct evidence analysis: the evidence directly contradicts the claim; "
        f"{spec.fact} Semantic features and relationships: the attributes stated in the claim "
        "conflict with the evidence. Linguistic patterns and connections: the evidence asserts a "
        "different fact where the claim asserts its own. Logical reasoning strictly from the "
        "evidence: taken together, the retrieved paragraphs refute the claim."
    )


def weak_true(spec: Spec) -> str:
    return (
        "Supporting analysis. Direct evidence analysis: no passage directly confirms the claim about "
        f"{spec.topic}. Semantic features and relationships: the claim's attributes find no match in "
        "the evidence. Linguistic patterns and connections: nothing in the evidence parallels the "
        "claim's phrasing. Logical reasoning strictly from the evidence: the evidence does not "
        "establish the claim."
    )


def rationale_for(spec: Spec, stance: str) -> str:
    if spec.strong == "true":
        return strong_true(spec) if stance == "true" else weak_false(spec)
    return strong_false(spec) if stance == "false" else weak_true(spec)


class AuthoringTransport:
    """Maps a rendered request back to its authored response."""

    def __init__(self, specs: list[Spec]):
        self.specs = specs

    def _spec_for(self, probe) -> Spec:
        matches = [s for s in self.specs if probe(s)]
        if len(matches) != 1:
            raise AssertionError(f"request matched {len(matches)} claim specs")
        return matches[0]

    def __call__(self, request: LlmRequest) -> str:
        prompt = request.prompt
        if request.template_id == prompts.PLAN_TEMPLATE_ID:
            spec = self._spec_for(lambda s: prompt.endswith(f"Claim: {s.text}"))
            return spec.plan if spec.plan else prompts.NO_AMBIGUITY_SENTINEL
        if request.template_id == prompts.ENTITY_TEMPLATE_ID:
            spec = self._spec_for(lambda s: prompt.endswith(f"Claim: {s.text}"))
            return "ENTITIES: " + " | ".join(spec.entities)
        if request.template_id == prompts.STEP_TEMPLATE_ID:
            question = prompt.rsplit("Question: ", 1)[1]
            for spec in self.specs:
                if question in spec.steps:
                    return spec.steps[question]
            raise AssertionError(f"no authored answer for step question {question!r}")
        if request.template_id == prompts.RATIONALE_TEMPLATE_ID:
            stance = "true" if " is true based on the given evidence" in prompt else "false"
            spec = self._spec_for(lambda s: prompt.startswith(f"Analyze why the following claim {s.text} is"))
            return rationale_for(spec, stance)
        if request.template_id == prompts.JUDGMENT_TEMPLATE_ID:
            spec = self._spec_for(lambda s: prompt.startswith(f"Given claim {s.text} and"))
            return f"The claim is {spec.y_llm}."
        raise AssertionError(f"unexpected template {request.template_id}")


TRAIN_WORLD = [
    ("the film Harbor Lights", "the film page confirms the production year and the director's name."),
    ("the director Mira Holloway", "her page confirms the stated birthplace and profession."),
    ("the novel The Gilded Fern", "the novel page confirms the publication year stated in the claim."),
    ("the author Tomas Reyes", "the author page confirms the stated birthplace."),
    ("the band Cobalt Parade", "the band page confirms the formation year and home city."),
    ("the singer Elsa Varga", "her page confirms the stated birthplace and role in the band."),
    ("the album Night Arithmetic", "the album page confirms the release year and the recording band."),
    ("the city of Port Ellery", "the city page confirms the founding year stated in the claim."),
    ("Ellery Lighthouse", "the lighthouse page confirms the completion year and the engineer."),
    ("the racehorse Saffron Comet", "the horse page confirms the named race and the winning year."),
    ("the trainer Nora Quill", "her page confirms the stated birthplace and induction year."),
    ("Copenhagen Film Week", "the festival page confirms the founding year and its prize."),
]

TRAIN_REFUTES = [
    ("the film Harbor Lights", "the film page names a different director than the claim does."),
    ("the director Mira Holloway", "her page states a different birthplace than the claim does."),
    ("the novel The Gilded Fern", "the novel page gives a different publication year than the claim."),
    ("the author Tomas Reyes", "the author page states a different birthplace than the claim."),
    ("the band Cobalt Parade", "the band page gives a different formation year than the claim."),
    ("the singer Elsa Varga", "her page states a different birth city than the claim does."),
    ("the album Night Arithmetic", "the album page gives a different release year than the claim."),
    ("the city of Port Ellery", "the city page describes a different economy than the claim does."),
    ("Ellery Lighthouse", "the lighthouse page names a different designer than the claim does."),
    ("the racehorse Saffron Comet", "the horse page records a different winning year than the claim."),
    ("the trainer Nora Quill", "her page states a different birthplace than the claim does."),
    ("Copenhagen Film Week", "the festival page gives a different founding year than the claim."),
]


def build_training_rows() -> list[dict]:
    """24 rows: 12 gold-true, 12 gold-false, with y_llm wrong every sixth row."""
    rows = []
    for i, (topic, fact) in enumerate(TRAIN_WORLD):
        spec = Spec(f"t{i:02d}", f"Training statement {i} about {topic}.", "true", 1, [], [], topic, fact)
        y = "false" if i % 6 == 5 else "true"
        rows.append({
            "id": spec.cid, "claim": spec.text, "gold": "true", "y_llm": y,
            "r_true": strong_true(spec), "r_false": weak_false(spec),
        })
    for i, (topic, fact) in enumerate(TRAIN_REFUTES):
        spec = Spec(f"f{i:02d}", f"Training statement {i + 12} about {topic}.", "false", 1, [], [], topic, fact)
        y = "true" if i % 6 == 5 else "false"
        rows.append({
            "id": spec.cid, "claim": spec.text, "gold": "false", "y_llm": y,
            "r_true": weak_true(spec), "r_false": strong_false(spec),
        })
    return rows


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    corpus_path = OUT / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for title, paragraphs in PAGES:
            record = {"title": title, "url": WIKI + title.replace(" ", "_"), "paragraphs": paragraphs}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    store = ingest_corpus(corpus_path)
    assert store.page_count == 12 and store.paragraph_count == 44, (
        store.page_count, store.paragraph_count)

    claims_path = OUT / "claims_hover.json"
    rows = [
        {
            "uid": s.cid,
            "claim": s.text,
            "label": "SUPPORTED" if s.gold == "true" else "NOT_SUPPORTED",
            "num_hops": s.hops,
            "supporting_facts": s.gold_evidence,
        }
        for s in SPECS
    ]
    claims_path.write_text(json.dumps(rows, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")

    train_path = OUT / "train_judge.jsonl"
    with open(train_path, "w", encoding="utf-8") as fh:
        for row in build_training_rows():
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    provider = HashingEncoder(dimension=256)
    examples = load_judge_examples(train_path)
    model = init_model(provider.dimension, hidden=32, seed=7)
    model, trace = train(
        model, examples, provider, TrainConfig(epochs=120, batch_size=8, learning_rate=0.5, seed=7)
    )
    ckpt_path = OUT / "judge.ckpt"
    save_model(model, ckpt_path)
    print(f"judge trained: first-epoch loss {trace[0]:.4f} -> final {trace[-1]:.4f}")

    cache_path = OUT / "llm_cache.jsonl"
    if cache_path.exists():
        cache_path.unlink()
    cache = ReplayCache(cache_path)
    recorder = LlmClient(mode="record", cache=cache)
    recorder._call_live = AuthoringTransport(SPECS)

    index = build_index(store.all_paragraphs())
    claims = load_dataset(claims_path, "hover").claims
    assert len(claims) == 20
    resources = Resources(store=store, llm=recorder, index=index, judge=model, provider=provider)

    report = run_pipeline(claims, RunConfig(setting="open"), resources)
    assert report.failed_claims == 0

    intended = {s.cid: s.strong for s in SPECS}
    mismatches = [
        (r.claim_id, r.predicted, intended[r.claim_id])
        for r in report.records
        if r.predicted != intended[r.claim_id]
    ]
    assert not mismatches, f"judge disagrees with the authored design: {mismatches}"
    assert report.accuracy == 17 / 20, report.accuracy
    assert report.evidence_ratio == 22 / 25, report.evidence_ratio
    assert report.claim_ratio == 19 / 20, report.claim_ratio

    gold_report = run_pipeline(claims, RunConfig(setting="gold"), resources)
    assert gold_report.failed_claims == 0
    assert gold_report.accuracy == 17 / 20, gold_report.accuracy

    # golden CLI output for the first fixture claim, replayed from the cache
    from claimcheck.cli import main as cli_main

    golden_dir = REPO / "tests" / "fixtures" / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)
    index_path = OUT / "bm25_index.json"
    from claimcheck.retrieval import save_index

    save_index(index, index_path)
    stdout = io.StringIO()
    with contextlib.redirect_stdout(stdout):
        code = cli_main([
            "verify", SPECS[0].text,
            "--corpus", str(corpus_path),
            "--index", str(index_path),
            "--model", str(ckpt_path),
            "--llm-mode", "replay",
            "--llm-cache", str(cache_path),
        ])
    assert code == 0
    (golden_dir / "verify_output.txt").write_text(stdout.getvalue(), encoding="utf-8")

    print(f"cache entries: {len(cache)}")
    print("per-claim summary (id gold y_llm predicted):")
    for spec, record in zip(SPECS, report.records):
        print(f"  {spec.cid} {spec.gold:5s} {spec.y_llm:5s} {record.predicted:5s}")
    print("fixtures written to", OUT)


if __name__ == "__main__":
    main()
