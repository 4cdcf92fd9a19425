"""Prompt templates, versioned by template id.

Template ids are part of every request digest, so bumping a version here
invalidates stale cache entries instead of silently replaying them.
"""

from __future__ import annotations

PLAN_TEMPLATE_ID = "ambiguity-plan.v1"
STEP_TEMPLATE_ID = "plan-step.v1"
ENTITY_TEMPLATE_ID = "entity-extraction.v1"
RATIONALE_TEMPLATE_ID = "stance-rationale.v1"
JUDGMENT_TEMPLATE_ID = "preliminary-judgment.v1"

NO_AMBIGUITY_SENTINEL = "NO_AMBIGUITY"
ENTITY_LINE_PREFIX = "ENTITIES:"

PLAN_TEMPLATE = """\
You will be given a claim. Identify every entity that the claim describes only \
indirectly (for example "the director of the film" or "the band's lead singer") \
instead of naming it outright.

Write one clarifying question per indirect reference, each on its own line, \
formatted exactly as:
STEP <i>: <question>

Number the steps from 1 in the order they must be answered. A later question may \
embed an earlier answer by writing the placeholder {{A<i>}}. If every entity in \
the claim is already named explicitly, reply with the single line:
NO_AMBIGUITY

Claim: {claim}"""

STEP_TEMPLATE = """\
Answer the question using the context paragraphs. Reply with only the answer, as \
a short phrase naming the entity.

Context:
{context}

Question: {question}"""

ENTITY_TEMPLATE = """\
List every explicitly named entity in the claim (people, creative works, places, \
organizations). Reply with a single line formatted exactly as:
ENTITIES: <entity 1> | <entity 2> | ...

If the claim names no entities, reply with exactly:
ENTITIES:

Claim: {claim}"""

# The four analysis angles the rationale prompt asks for, in fixed order. The
# tuple is overridable in build_rationale_prompt for ablation experiments, but
# there is no dedicated code path per variant.
DEFAULT_ASPECTS: tuple[str, ...] = (
    "Direct evidence analysis",
    "Semantic features and relationships",
    "Linguistic patterns and connections",
    "Logical reasoning strictly from the evidence",
)

RATIONALE_TEMPLATE_PREFIX = (
    "Analyze why the following claim {claim} is {stance} based on the given "
    "evidence {evidence}. Provide a clear and detailed explanation that focuses on: "
)

RATIONALE_TEMPLATE = RATIONALE_TEMPLATE_PREFIX + "; ".join(DEFAULT_ASPECTS) + "."

JUDGMENT_TEMPLATE = (
    "Given claim {claim} and the following two claim rationales: "
    "(1) true:{r_true};(2) false:{r_false}, is this claim true or false?"
)
