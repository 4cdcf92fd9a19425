"""Dataset loading, batch experiment runner, and the reported metrics.

Dataset formats (documented field by field):

* ``hover``: JSON array or JSONL of objects with ``claim`` (str), ``label``
  ("SUPPORTED" -> true, "NOT_SUPPORTED" -> false), optional ``uid``/``id``,
  optional ``num_hops`` (int), optional ``supporting_facts`` as
  ``[[page_title, paragraph_index], ...]``.
* ``feverous``: JSONL of objects with ``claim``, ``label`` ("SUPPORTS" -> true,
  "REFUTES" -> false, anything else skipped), optional ``id``, and ``evidence``
  as a list of evidence sets whose ``content`` entries look like
  ``"PageTitle_sentence_3"`` (sentence elements) or ``"PageTitle_cell_0_1_2"``
  (structured elements). Only rows whose first evidence set is purely textual
  are loaded; sentence ids index the corpus paragraphs.

Rows with any other label are skipped and counted, never fatal.
"""

from __future__ import annotations

import json
import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .claim import Claim, Stance
from .judge import JudgeExample
from .pipeline import Resources, RunConfig, VerificationResult, verify_claim

logger = logging.getLogger(__name__)

# LabeledClaim is a Claim whose gold_label is guaranteed by the loader.
LabeledClaim = Claim

_HOVER_LABELS = {"SUPPORTED": Stance.TRUE, "NOT_SUPPORTED": Stance.FALSE}
_FEVEROUS_LABELS = {"SUPPORTS": Stance.TRUE, "REFUTES": Stance.FALSE}
_STRUCTURED_MARKERS = ("_cell_", "_header_cell_", "_table_caption_", "_item_", "_table_")


@dataclass
class LoadedDataset:
    claims: list[Claim]
    skipped: int = 0


def _rows_from_file(path: str | Path) -> list[tuple[int, dict]]:
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON array: {exc}") from exc
        return [(i + 1, row) for i, row in enumerate(data)]
    rows: list[tuple[int, dict]] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{lineno}: malformed JSON row: {exc}") from exc
    return rows


def _parse_sentence_element(element: str) -> tuple[str, int] | None:
    title, sep, rest = element.rpartition("_sentence_")
    if not sep or not rest.isdigit():
        return None
    return title, int(rest)


def _feverous_gold(row: dict) -> list[tuple[str, int]] | None:
    """Sentence references of the first evidence set; None when the set needs tables."""
    evidence_sets = row.get("evidence") or []
    if not evidence_sets:
        return []
    content = evidence_sets[0].get("content", []) if isinstance(evidence_sets[0], dict) else []
    gold: list[tuple[str, int]] = []
    for element in content:
        if not isinstance(element, str):
            return None
        if any(marker in element for marker in _STRUCTURED_MARKERS):
            return None
        parsed = _parse_sentence_element(element)
        if parsed is None:
            return None
        gold.append(parsed)
    return gold


def load_dataset(path: str | Path, fmt: str) -> LoadedDataset:
    """Parse a dataset file into labeled claims; unusable rows are counted, not fatal."""
    if fmt not in ("hover", "feverous"):
        raise ValueError(f"unknown dataset format {fmt!r}")
    result = LoadedDataset(claims=[])
    for lineno, row in _rows_from_file(path):
        if not isinstance(row, dict) or not isinstance(row.get("claim"), str) or not row["claim"].strip():
            raise ValueError(f"{path}: row {lineno} has no usable claim text")
        label_map = _HOVER_LABELS if fmt == "hover" else _FEVEROUS_LABELS
        label = label_map.get(str(row.get("label", "")).strip())
        if label is None:
            result.skipped += 1
            continue
        claim_id = str(row.get("uid") or row.get("id") or lineno)
        if fmt == "hover":
            gold = [
                (str(title), int(idx))
                for title, idx in row.get("supporting_facts", [])
            ]
            hops = row.get("num_hops")
        else:
            parsed = _feverous_gold(row)
            if parsed is None:
                logger.info("row %s needs structured evidence; skipped", claim_id)
                result.skipped += 1
                continue
            gold = parsed
            hops = None
        result.claims.append(
            Claim(
                text=row["claim"],
                id=claim_id,
                gold_label=label,
                gold_evidence=tuple(gold),
                hops=int(hops) if hops is not None else None,
            )
        )
    return result


def accuracy(preds: Sequence[Stance], golds: Sequence[Stance]) -> float:
    """Fraction of exact matches over paired predictions."""
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    if not preds:
        raise ValueError("accuracy over zero claims is undefined")
    return sum(p is g for p, g in zip(preds, golds)) / len(preds)


@dataclass(frozen=True)
class EvidenceQuality:
    evidence_ratio: float
    claim_ratio: float
    evaluated_claims: int
    excluded_claims: int


def evidence_quality(
    retrieved: Sequence[set[tuple[str, int]]],
    gold: Sequence[set[tuple[str, int]]],
) -> EvidenceQuality:
    """Retrieved-gold over total-gold, and fraction of claims with at least one hit.

    Claims with an empty gold set are excluded from both numerators and
    denominators. Keys are (page title, paragraph index); titles are normalized
    here so callers can pass raw strings.
    """
    from .corpus import normalize_title

    if len(retrieved) != len(gold):
        raise ValueError(f"length mismatch: {len(retrieved)} retrieved vs {len(gold)} gold sets")

    def norm(keys: set[tuple[str, int]]) -> set[tuple[str, int]]:
        return {(normalize_title(t), i) for t, i in keys}

    total_gold = 0
    total_hits = 0
    claims_with_hit = 0
    evaluated = 0
    excluded = 0
    for got, want in zip(retrieved, gold):
        if not want:
            excluded += 1
            logger.info("claim with empty gold evidence excluded from quality metrics")
            continue
        evaluated += 1
        hits = len(norm(got) & norm(want))
        total_gold += len(want)
        total_hits += hits
        if hits >= 1:
            claims_with_hit += 1
    if evaluated == 0:
        raise ValueError("every claim has an empty gold set; evidence quality is undefined")
    return EvidenceQuality(
        evidence_ratio=total_hits / total_gold,
        claim_ratio=claims_with_hit / evaluated,
        evaluated_claims=evaluated,
        excluded_claims=excluded,
    )


@dataclass
class ClaimRecord:
    """Per-claim outcome; ``error`` is set instead of a prediction when a stage failed."""

    claim_id: str
    claim_text: str
    gold: str | None
    predicted: str | None = None
    y_llm: str | None = None
    judgment_parse_failed: bool = False
    p_true: float | None = None
    p_false: float | None = None
    explanation: str | None = None
    sources: list[list[str]] = field(default_factory=list)
    retrieved: list[list[object]] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "claim_id": self.claim_id,
            "claim_text": self.claim_text,
            "gold": self.gold,
            "predicted": self.predicted,
            "y_llm": self.y_llm,
            "judgment_parse_failed": self.judgment_parse_failed,
            "p_true": self.p_true,
            "p_false": self.p_false,
            "explanation": self.explanation,
            "sources": self.sources,
            "retrieved": self.retrieved,
            "error": self.error,
        }


@dataclass
class RunReport:
    config: dict
    records: list[ClaimRecord]
    accuracy: float | None
    evidence_ratio: float | None
    claim_ratio: float | None
    evaluated_claims: int
    failed_claims: int
    elapsed_seconds: float = 0.0

    def canonical_dict(self) -> dict:
        """Everything except wall-clock timing, which would break determinism."""
        return {
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "accuracy": self.accuracy,
            "evidence_ratio": self.evidence_ratio,
            "claim_ratio": self.claim_ratio,
            "evaluated_claims": self.evaluated_claims,
            "failed_claims": self.failed_claims,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def run_pipeline(
    claims: Sequence[Claim],
    config: RunConfig,
    resources: Resources,
    workers: int = 1,
) -> RunReport:
    """Verify every claim, isolate per-claim failures, and aggregate the metrics.

    Records keep the input claim order regardless of worker count, so a run with
    a fully populated replay cache is byte-identical across repetitions.
    """
    start = time.monotonic()

    def run_one(claim: Claim) -> tuple[VerificationResult | None, str | None]:
        try:
            return verify_claim(claim, resources, config), None
        except Exception as exc:  # noqa: BLE001 - one bad claim never aborts a run
            logger.error("claim %r failed: %s", claim.id, exc)
            return None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, claims))
    else:
        outcomes = [run_one(c) for c in claims]

    records: list[ClaimRecord] = []
    preds: list[Stance] = []
    golds: list[Stance] = []
    retrieved_sets: list[set[tuple[str, int]]] = []
    gold_sets: list[set[tuple[str, int]]] = []
    failed = 0
    for claim, (result, error) in zip(claims, outcomes):
        record = ClaimRecord(
            claim_id=claim.id,
            claim_text=claim.text,
            gold=claim.gold_label.word if claim.gold_label is not None else None,
        )
        if result is None:
            record.error = error
            failed += 1
        else:
            verdict = result.verdict
            record.predicted = verdict.label.word
            record.y_llm = result.pair.y_llm.word
            record.judgment_parse_failed = result.pair.judgment_parse_failed
            record.p_true = verdict.p_true
            record.p_false = verdict.p_false
            record.explanation = verdict.explanation
            record.sources = [[title, url] for title, url in verdict.sources]
            record.retrieved = sorted([t, i] for t, i in result.evidence.keys())
            if claim.gold_label is not None:
                preds.append(verdict.label)
                golds.append(claim.gold_label)
            if config.setting == "open":
                retrieved_sets.append(result.evidence.keys())
                gold_sets.append(set(claim.gold_evidence))
        records.append(record)

    acc = accuracy(preds, golds) if preds else None
    ev_ratio = cl_ratio = None
    if retrieved_sets and any(gold_sets):
        quality = evidence_quality(retrieved_sets, gold_sets)
        ev_ratio = quality.evidence_ratio
        cl_ratio = quality.claim_ratio
    return RunReport(
        config=config.to_dict(),
        records=records,
        accuracy=acc,
        evidence_ratio=ev_ratio,
        claim_ratio=cl_ratio,
        evaluated_claims=len(preds),
        failed_claims=failed,
        elapsed_seconds=time.monotonic() - start,
    )


def write_report(report: RunReport, path: str | Path, fmt: str = "json") -> None:
    """``json``: one canonical document. ``tsv``: per-claim rows plus '#' summary lines."""
    path = Path(path)
    if fmt == "json":
        path.write_text(report.canonical_json(), encoding="utf-8")
        return
    if fmt != "tsv":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = ["\t".join(("claim_id", "gold", "predicted", "y_llm", "p_true", "p_false", "error"))]
    for r in report.records:
        lines.append(
            "\t".join(
                str(x if x is not None else "")
                for x in (r.claim_id, r.gold, r.predicted, r.y_llm, r.p_true, r.p_false, r.error)
            )
        )
    for name in ("accuracy", "evidence_ratio", "claim_ratio", "evaluated_claims", "failed_claims"):
        lines.append(f"# {name}\t{getattr(report, name)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_reference_metrics() -> dict:
    """Published dataset-scale reference numbers, for delta reporting only."""
    from importlib import resources as importlib_resources

    text = importlib_resources.files("claimcheck").joinpath("data/reference_metrics.json").read_text("utf-8")
    return json.loads(text)


def mix_training_data(
    gold_pool: Sequence[JudgeExample],
    open_pool: Sequence[JudgeExample],
    ratio: tuple[int, int],
    seed: int = 0,
    total: int | None = None,
) -> list[JudgeExample]:
    """Seeded open/gold mix at the requested ``(open, gold)`` proportion.

    Draws are sampled without replacement from each pool and interleaved
    deterministically. The default draw count is the larger pool size; when a
    pool cannot supply its share the total shrinks so the proportion survives.
    """
    open_part, gold_part = ratio
    if open_part < 0 or gold_part < 0 or (open_part == 0 and gold_part == 0):
        raise ValueError(f"ratio parts must be non-negative and not both zero: {ratio}")
    if not gold_pool and not open_pool:
        raise ValueError("both example pools are empty")

    parts = open_part + gold_part
    n_total = total if total is not None else max(len(open_pool), len(gold_pool))
    n_open = round(n_total * open_part / parts)
    n_gold = n_total - n_open
    while n_total > 0 and (n_open > len(open_pool) or n_gold > len(gold_pool)):
        n_total -= 1
        n_open = round(n_total * open_part / parts)
        n_gold = n_total - n_open

    rng = random.Random(seed)
    open_draw = rng.sample(list(open_pool), n_open)
    gold_draw = rng.sample(list(gold_pool), n_gold)

    mixed: list[JudgeExample] = []
    oi = gi = 0
    for k in range(n_total):
        # spread the open draws evenly across the sequence
        take_open = (k + 1) * n_open // n_total > k * n_open // n_total
        if take_open and oi < n_open:
            mixed.append(open_draw[oi])
            oi += 1
        else:
            mixed.append(gold_draw[gi])
            gi += 1
    return mixed
