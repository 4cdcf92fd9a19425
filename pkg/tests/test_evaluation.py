"""Dataset loading, metrics arithmetic, and training-data mixing."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, strategies as st

from claimcheck.claim import Claim, Stance
from claimcheck.evaluation import (
    EvidenceQuality,
    accuracy,
    evidence_quality,
    load_dataset,
    load_reference_metrics,
    mix_training_data,
)
from claimcheck.judge import JudgeExample
from claimcheck.reasoning import Rationale, RationalePair


class TestLoadHover:
    def write(self, tmp_path, rows):
        path = tmp_path / "hover.json"
        path.write_text(json.dumps(rows), encoding="utf-8")
        return path

    def test_four_row_fixture(self, tmp_path):
        rows = [
            {"uid": "1", "claim": "a b", "label": "SUPPORTED", "num_hops": 2,
             "supporting_facts": [["Page A", 0]]},
            {"uid": "2", "claim": "c d", "label": "NOT_SUPPORTED", "num_hops": 3,
             "supporting_facts": [["Page B", 1], ["Page C", 0]]},
            {"uid": "3", "claim": "e f", "label": "SUPPORTED"},
            {"uid": "4", "claim": "g h", "label": "NOT_SUPPORTED"},
        ]
        loaded = load_dataset(self.write(tmp_path, rows), "hover")
        assert len(loaded.claims) == 4 and loaded.skipped == 0
        histogram = {Stance.TRUE: 0, Stance.FALSE: 0}
        for claim in loaded.claims:
            histogram[claim.gold_label] += 1
        assert histogram == {Stance.TRUE: 2, Stance.FALSE: 2}
        assert loaded.claims[0].hops == 2
        assert loaded.claims[1].gold_evidence == (("Page B", 1), ("Page C", 0))
        assert loaded.claims[2].hops is None

    def test_unknown_label_skipped(self, tmp_path):
        rows = [{"uid": "1", "claim": "a", "label": "MAYBE"}]
        loaded = load_dataset(self.write(tmp_path, rows), "hover")
        assert loaded.claims == [] and loaded.skipped == 1

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        loaded = load_dataset(path, "hover")
        assert loaded.claims == [] and loaded.skipped == 0

    def test_malformed_line_diagnostics(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"claim": "x", "label": "SUPPORTED"}\n{oops\n', encoding="utf-8")
        with pytest.raises(ValueError, match="bad.jsonl:2"):
            load_dataset(path, "hover")

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            load_dataset(tmp_path / "x", "fever")


class TestLoadFeverous:
    def write(self, tmp_path, rows):
        path = tmp_path / "feverous.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        return path

    def test_supports_and_refutes(self, tmp_path):
        rows = [
            {"id": 1, "claim": "a", "label": "SUPPORTS",
             "evidence": [{"content": ["Page A_sentence_0", "Page A_sentence_2"]}]},
            {"id": 2, "claim": "b", "label": "REFUTES",
             "evidence": [{"content": ["Page B_sentence_1"]}]},
        ]
        loaded = load_dataset(self.write(tmp_path, rows), "feverous")
        assert [c.gold_label for c in loaded.claims] == [Stance.TRUE, Stance.FALSE]
        assert loaded.claims[0].gold_evidence == (("Page A", 0), ("Page A", 2))

    def test_nei_skipped_and_counted(self, tmp_path):
        rows = [{"id": 1, "claim": "a", "label": "NOT ENOUGH INFO", "evidence": []}]
        loaded = load_dataset(self.write(tmp_path, rows), "feverous")
        assert loaded.claims == [] and loaded.skipped == 1

    def test_structured_evidence_rows_skipped(self, tmp_path):
        rows = [
            {"id": 1, "claim": "a", "label": "SUPPORTS",
             "evidence": [{"content": ["Page A_cell_0_1_2"]}]},
            {"id": 2, "claim": "b", "label": "SUPPORTS",
             "evidence": [{"content": ["Page B_sentence_0"]}]},
        ]
        loaded = load_dataset(self.write(tmp_path, rows), "feverous")
        assert [c.id for c in loaded.claims] == ["2"]
        assert loaded.skipped == 1


class TestAccuracy:
    def test_identical(self):
        xs = [Stance.TRUE, Stance.FALSE, Stance.TRUE]
        assert accuracy(xs, xs) == 1.0

    def test_three_of_four(self):
        preds = [Stance.TRUE, Stance.TRUE, Stance.FALSE, Stance.FALSE]
        golds = [Stance.TRUE, Stance.FALSE, Stance.FALSE, Stance.FALSE]
        assert accuracy(preds, golds) == 0.75

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy([Stance.TRUE], [])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])

    @given(st.lists(st.booleans(), min_size=1, max_size=30), st.randoms())
    def test_permutation_equivariant_under_paired_shuffles(self, bits, rng):
        preds = [Stance.TRUE if b else Stance.FALSE for b in bits]
        golds = [Stance.TRUE for _ in bits]
        pairs = list(zip(preds, golds))
        rng.shuffle(pairs)
        shuffled_preds, shuffled_golds = zip(*pairs)
        assert accuracy(preds, golds) == accuracy(list(shuffled_preds), list(shuffled_golds))


class TestEvidenceQuality:
    def test_full_coverage(self):
        gold = [{("A", 0), ("A", 1)}, {("B", 2)}]
        retrieved = [{("A", 0), ("A", 1), ("C", 5)}, {("B", 2)}]
        q = evidence_quality(retrieved, gold)
        assert (q.evidence_ratio, q.claim_ratio) == (1.0, 1.0)

    def test_half_and_zero_hits(self):
        gold = [{("A", 0), ("A", 1)}, {("B", 0), ("B", 1)}]
        retrieved = [{("A", 0)}, {("C", 9)}]
        q = evidence_quality(retrieved, gold)
        assert q.evidence_ratio == 0.25
        assert q.claim_ratio == 0.5

    def test_title_normalization_applies(self):
        gold = [{("Page_A", 0)}]
        retrieved = [{("page a", 0)}]
        q = evidence_quality(retrieved, gold)
        assert q.evidence_ratio == 1.0

    def test_empty_gold_excluded(self, caplog):
        gold = [set(), {("A", 0)}]
        retrieved = [{("X", 1)}, {("A", 0)}]
        with caplog.at_level("INFO"):
            q = evidence_quality(retrieved, gold)
        assert q.evaluated_claims == 1 and q.excluded_claims == 1
        assert (q.evidence_ratio, q.claim_ratio) == (1.0, 1.0)

    def test_all_empty_gold_rejected(self):
        with pytest.raises(ValueError):
            evidence_quality([set()], [set()])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            evidence_quality([set()], [])

    def test_monotone_in_retrieved_gold(self):
        gold = [{("A", 0), ("A", 1)}, {("B", 0)}]
        base = [{("A", 0)}, set()]
        more = [{("A", 0), ("A", 1)}, set()]
        q_base = evidence_quality(base, gold)
        q_more = evidence_quality(more, gold)
        assert q_more.evidence_ratio >= q_base.evidence_ratio
        assert q_more.claim_ratio >= q_base.claim_ratio


def make_examples(tag: str, count: int) -> list[JudgeExample]:
    out = []
    for i in range(count):
        pair = RationalePair(
            r_true=Rationale(stance=Stance.TRUE, text=f"{tag} true {i}"),
            r_false=Rationale(stance=Stance.FALSE, text=f"{tag} false {i}"),
            y_llm=Stance.TRUE,
        )
        out.append(JudgeExample(claim=Claim(text=f"{tag} claim {i}", id=f"{tag}{i}"), pair=pair, gold=Stance.TRUE))
    return out


def source_tag(example: JudgeExample) -> str:
    return "open" if example.claim.id.startswith("open") else "gold"


class TestMixTrainingData:
    def test_pure_open(self):
        gold, open_ = make_examples("gold", 80), make_examples("open", 80)
        mixed = mix_training_data(gold, open_, (100, 0), seed=1)
        assert len(mixed) == 80
        assert all(source_tag(e) == "open" for e in mixed)

    def test_eighty_twenty_from_equal_pools(self):
        gold, open_ = make_examples("gold", 80), make_examples("open", 80)
        mixed = mix_training_data(gold, open_, (80, 20), seed=1)
        counts = {"open": 0, "gold": 0}
        for e in mixed:
            counts[source_tag(e)] += 1
        assert counts == {"open": 64, "gold": 16}

    def test_same_seed_identical(self):
        gold, open_ = make_examples("gold", 40), make_examples("open", 40)
        a = mix_training_data(gold, open_, (75, 25), seed=9)
        b = mix_training_data(gold, open_, (75, 25), seed=9)
        assert [e.claim.id for e in a] == [e.claim.id for e in b]

    def test_draws_without_replacement(self):
        gold, open_ = make_examples("gold", 30), make_examples("open", 30)
        mixed = mix_training_data(gold, open_, (90, 10), seed=3)
        ids = [e.claim.id for e in mixed]
        assert len(ids) == len(set(ids))

    def test_exhausted_pool_truncates_proportionally(self):
        gold, open_ = make_examples("gold", 2), make_examples("open", 100)
        mixed = mix_training_data(gold, open_, (80, 20), seed=3)
        counts = {"open": 0, "gold": 0}
        for e in mixed:
            counts[source_tag(e)] += 1
        assert counts["gold"] <= 2
        total = counts["open"] + counts["gold"]
        assert abs(counts["open"] - 0.8 * total) <= 1

    def test_bad_ratio_rejected(self):
        with pytest.raises(ValueError):
            mix_training_data([], make_examples("open", 1), (0, 0))

    def test_both_pools_empty_rejected(self):
        with pytest.raises(ValueError):
            mix_training_data([], [], (1, 1))


class TestReferenceMetrics:
    def test_file_loads_with_expected_structure(self):
        # values are delta-reporting metadata only; tests never assert them
        reference = load_reference_metrics()
        assert set(reference["accuracy"]) == {"hover-2hop", "hover-3hop", "hover-4hop", "feverous"}
        for entry in reference["accuracy"].values():
            assert set(entry) == {"gold", "open"}
        for entry in reference["evidence_quality"].values():
            assert set(entry) == {"evidence_ratio", "claim_ratio"}
