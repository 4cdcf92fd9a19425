"""Trainable judge head: stance-ordered dual-branch classifier with convex fusion.

Both claim+rationale sequences are encoded by a frozen provider, scored by one
shared tanh MLP (d -> h -> 2), and fused as ``p = w1*p1 + w2*p2`` where the
weights come from two learnable logits, so 0 < w_i < 1 and w1 + w2 = 1 hold by
construction. Probability vectors are ordered [true, false]. Training is plain
mini-batch gradient descent for exact, seed-reproducible runs.
"""

from __future__ import annotations

import base64
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .claim import Claim, Stance
from .encoders import EmbeddingProvider
from .reasoning import Rationale, RationalePair

logger = logging.getLogger(__name__)

BRANCH_SEPARATOR = " [SEP] "
DEFAULT_HIDDEN = 128
LOG_CLAMP = 1e-12
_FUSION_LOGIT_SPAN = 30.0  # keeps the weights strictly inside (0, 1)

PARAM_NAMES = ("w_in", "b_in", "w_out", "b_out", "fusion_logits")


@dataclass(frozen=True)
class JudgeExample:
    claim: Claim
    pair: RationalePair
    gold: Stance


@dataclass(frozen=True)
class Verdict:
    """Final label with its fused probability, explanation, and cited sources."""

    label: Stance
    p_true: float
    p_false: float
    explanation: str
    sources: tuple[tuple[str, str], ...] = ()

    @property
    def p_ver(self) -> tuple[float, float]:
        return (self.p_true, self.p_false)


@dataclass
class JudgeModel:
    w_in: np.ndarray  # (dim, hidden)
    b_in: np.ndarray  # (hidden,)
    w_out: np.ndarray  # (hidden, 2)
    b_out: np.ndarray  # (2,)
    fusion_logits: np.ndarray  # (2,)

    @property
    def dim(self) -> int:
        return self.w_in.shape[0]

    @property
    def hidden(self) -> int:
        return self.w_in.shape[1]

    def fusion_weights(self) -> tuple[float, float]:
        """(w1, w2) with w1 + w2 = 1 exactly and both strictly inside (0, 1)."""
        gap = float(np.clip(self.fusion_logits[0] - self.fusion_logits[1],
                            -_FUSION_LOGIT_SPAN, _FUSION_LOGIT_SPAN))
        w1 = 1.0 / (1.0 + math.exp(-gap))
        return w1, 1.0 - w1

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "JudgeModel":
        return JudgeModel(**{name: value.copy() for name, value in self.params().items()})

    def equals(self, other: "JudgeModel") -> bool:
        return all(np.array_equal(getattr(self, n), getattr(other, n)) for n in PARAM_NAMES)


def init_model(dim: int, hidden: int = DEFAULT_HIDDEN, seed: int = 0) -> JudgeModel:
    """Small uniform init; fusion logits start equal so w1 = w2 = 0.5."""
    rng = np.random.default_rng(seed)
    return JudgeModel(
        w_in=rng.uniform(-0.05, 0.05, size=(dim, hidden)),
        b_in=np.zeros(hidden),
        w_out=rng.uniform(-0.05, 0.05, size=(hidden, 2)),
        b_out=np.zeros(2),
        fusion_logits=np.zeros(2),
    )


def order_rationales(pair: RationalePair) -> tuple[Rationale, Rationale]:
    """The rationale agreeing with y_llm goes first; the opposing one second."""
    first = pair.for_stance(pair.y_llm)
    second = pair.for_stance(pair.y_llm.opposite)
    return first, second


def encode_branch(claim: Claim, rationale: Rationale, provider: EmbeddingProvider) -> np.ndarray:
    """Embedding of ``claim [SEP] rationale``; provider failures surface to the caller."""
    vec = np.asarray(provider.encode(claim.text + BRANCH_SEPARATOR + rationale.text),
                     dtype=np.float64)
    if vec.shape != (provider.dimension,):
        raise ValueError(f"provider returned shape {vec.shape}, expected ({provider.dimension},)")
    return vec


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - np.max(logits))
    return shifted / shifted.sum()


def _branch_forward(model: JudgeModel, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hidden = np.tanh(v @ model.w_in + model.b_in)
    return hidden, _softmax(hidden @ model.w_out + model.b_out)


def forward(
    model: JudgeModel, v1: np.ndarray, v2: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(p1, p2, p_ver) with p_ver the convex fusion of the two branch softmaxes."""
    for v in (v1, v2):
        if v.shape != (model.dim,):
            raise ValueError(f"embedding shape {v.shape} does not match model dim {model.dim}")
    _, p1 = _branch_forward(model, v1)
    _, p2 = _branch_forward(model, v2)
    w1, w2 = model.fusion_weights()
    return p1, p2, w1 * p1 + w2 * p2


def loss(p_ver: np.ndarray, gold: Stance) -> float:
    """Cross-entropy of the fused prediction, clamped for numerical safety."""
    return -math.log(max(float(p_ver[gold.prob_index]), LOG_CLAMP))


def _zero_grads(model: JudgeModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(value) for name, value in model.params().items()}


def _example_loss_and_grads(
    model: JudgeModel, v1: np.ndarray, v2: np.ndarray, gold: Stance
) -> tuple[float, dict[str, np.ndarray]]:
    """Analytic gradients of the clamped cross-entropy for one example."""
    h1, p1 = _branch_forward(model, v1)
    h2, p2 = _branch_forward(model, v2)
    w1, w2 = model.fusion_weights()
    p_ver = w1 * p1 + w2 * p2
    idx = gold.prob_index
    value = loss(p_ver, gold)

    grads = _zero_grads(model)
    if p_ver[idx] <= LOG_CLAMP:
        return value, grads  # inside the clamp the loss is locally flat

    inv = 1.0 / float(p_ver[idx])
    gap = float(model.fusion_logits[0] - model.fusion_logits[1])
    if abs(gap) < _FUSION_LOGIT_SPAN:
        d_gap = (float(p2[idx]) - float(p1[idx])) * inv * w1 * w2
        grads["fusion_logits"][0] = d_gap
        grads["fusion_logits"][1] = -d_gap

    for weight, hidden, p, v in ((w1, h1, p1, v1), (w2, h2, p2, v2)):
        # d loss / d logits for softmax with CE flowing only through the gold slot
        scale = weight * float(p[idx]) * inv
        d_logits = scale * (p - np.eye(2)[idx])
        grads["b_out"] += d_logits
        grads["w_out"] += np.outer(hidden, d_logits)
        d_hidden = (model.w_out @ d_logits) * (1.0 - hidden**2)
        grads["b_in"] += d_hidden
        grads["w_in"] += np.outer(v, d_hidden)
    return value, grads


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 16
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ValueError(f"invalid training config: {self}")


def _embed_examples(
    data: Sequence[JudgeExample], provider: EmbeddingProvider
) -> tuple[np.ndarray, np.ndarray, list[Stance]]:
    v1s, v2s, golds = [], [], []
    for example in data:
        first, second = order_rationales(example.pair)
        v1s.append(encode_branch(example.claim, first, provider))
        v2s.append(encode_branch(example.claim, second, provider))
        golds.append(example.gold)
    return np.stack(v1s), np.stack(v2s), golds


def train(
    model: JudgeModel,
    data: Sequence[JudgeExample],
    provider: EmbeddingProvider,
    config: TrainConfig,
) -> tuple[JudgeModel, list[float]]:
    """Mini-batch gradient descent on the mean fused cross-entropy.

    The provider stays frozen; only the MLP and the fusion logits move. Given the
    same seed the shuffle schedule, updates, and loss trace are identical.
    Returns the trained model and the per-epoch mean loss.
    """
    if not data:
        raise ValueError("training data must be non-empty")
    v1s, v2s, golds = _embed_examples(data, provider)
    rng = np.random.default_rng(config.seed)
    trace: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(data))
        batch_losses: list[float] = []
        for start in range(0, len(data), config.batch_size):
            batch = order[start : start + config.batch_size]
            total = _zero_grads(model)
            batch_loss = 0.0
            for i in batch:
                value, grads = _example_loss_and_grads(model, v1s[i], v2s[i], golds[i])
                batch_loss += value
                for name in total:
                    total[name] += grads[name]
            scale = 1.0 / len(batch)
            batch_loss *= scale
            if not math.isfinite(batch_loss):
                raise ArithmeticError(
                    f"non-finite loss {batch_loss} at epoch {epoch}; lower the learning rate"
                )
            for name, value in model.params().items():
                value -= config.learning_rate * scale * total[name]
            batch_losses.append(batch_loss)
        trace.append(sum(batch_losses) / len(batch_losses))
    return model, trace


def gradient_check(
    model: JudgeModel, example: JudgeExample, provider: EmbeddingProvider, step: float = 1e-5
) -> float:
    """Max relative error between analytic gradients and central finite differences.

    Zero-against-zero comparisons count as zero error, so a loss that sits inside
    the log clamp reports 0.
    """
    first, second = order_rationales(example.pair)
    v1 = encode_branch(example.claim, first, provider)
    v2 = encode_branch(example.claim, second, provider)
    _, analytic = _example_loss_and_grads(model, v1, v2, example.gold)

    def loss_at() -> float:
        _, _, p_ver = forward(model, v1, v2)
        return loss(p_ver, example.gold)

    worst = 0.0
    for name, param in model.params().items():
        flat = param.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = loss_at()
            flat[i] = original - step
            down = loss_at()
            flat[i] = original
            numeric = (up - down) / (2.0 * step)
            denom = max(abs(float(grad_flat[i])), abs(numeric))
            if denom > 1e-8:
                worst = max(worst, abs(float(grad_flat[i]) - numeric) / denom)
    return worst


def predict(
    model: JudgeModel,
    claim: Claim,
    pair: RationalePair,
    provider: EmbeddingProvider,
    sources: Sequence[tuple[str, str]] = (),
) -> Verdict:
    """Final label by argmax over the fused probabilities, ties resolved to false.

    The explanation is always the rationale whose stance matches the label.
    """
    first, second = order_rationales(pair)
    v1 = encode_branch(claim, first, provider)
    v2 = encode_branch(claim, second, provider)
    _, _, p_ver = forward(model, v1, v2)
    label = Stance.TRUE if p_ver[Stance.TRUE.prob_index] > p_ver[Stance.FALSE.prob_index] else Stance.FALSE
    return Verdict(
        label=label,
        p_true=float(p_ver[Stance.TRUE.prob_index]),
        p_false=float(p_ver[Stance.FALSE.prob_index]),
        explanation=pair.for_stance(label).text,
        sources=tuple(sources),
    )


def verdict_without_judge(pair: RationalePair, sources: Sequence[tuple[str, str]] = ()) -> Verdict:
    """Judge-ablated verdict: the preliminary LLM label becomes final (one-hot)."""
    label = pair.y_llm
    return Verdict(
        label=label,
        p_true=1.0 if label is Stance.TRUE else 0.0,
        p_false=1.0 if label is Stance.FALSE else 0.0,
        explanation=pair.for_stance(label).text,
        sources=tuple(sources),
    )


def load_judge_examples(path: str | Path) -> list[JudgeExample]:
    """Training rows from JSONL: {"id", "claim", "gold", "r_true", "r_false", "y_llm"}."""
    examples: list[JudgeExample] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                claim = Claim(text=row["claim"], id=str(row.get("id", lineno)))
                pair = RationalePair(
                    r_true=Rationale(stance=Stance.TRUE, text=row["r_true"], source_claim_id=claim.id),
                    r_false=Rationale(stance=Stance.FALSE, text=row["r_false"], source_claim_id=claim.id),
                    y_llm=Stance.from_word(row["y_llm"]),
                )
                examples.append(JudgeExample(claim=claim, pair=pair, gold=Stance.from_word(row["gold"])))
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad training row: {exc}") from exc
    return examples


def save_model(model: JudgeModel, path: str | Path) -> None:
    """Byte-deterministic JSON checkpoint; arrays are base64 little-endian float64."""
    payload = {
        "format": "claimcheck-judge",
        "version": 1,
        "dim": model.dim,
        "hidden": model.hidden,
        "params": {
            name: {
                "shape": list(value.shape),
                "data": base64.b64encode(value.astype("<f8").tobytes()).decode("ascii"),
            }
            for name, value in model.params().items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path: str | Path) -> JudgeModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != "claimcheck-judge":
        raise ValueError(f"{path}: not a judge checkpoint")
    arrays = {}
    for name in PARAM_NAMES:
        spec = payload["params"][name]
        arr = np.frombuffer(base64.b64decode(spec["data"]), dtype="<f8").astype(np.float64)
        arrays[name] = arr.reshape(spec["shape"]).copy()
    return JudgeModel(**arrays)
