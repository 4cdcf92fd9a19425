"""Encoder backends behind one tiny interface: ``dimension`` plus ``encode_batch``.

``load_encoder`` resolves a model id: anything of the form ``hash`` or
``hash:<dim>`` selects the built-in deterministic hashing encoder (no weights,
no downloads); any other id is treated as a sentence-transformers model name.
Inputs longer than MAX_TEXT_CHARS are truncated server-side before encoding.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

MAX_TEXT_CHARS = 8192
DEFAULT_MODEL_ID = "hash:384"

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


class Encoder(Protocol):
    model_id: str
    dimension: int

    def encode_batch(self, texts: Sequence[str]) -> np.ndarray: ...


class HashingSentenceEncoder:
    """Deterministic token+bigram feature hashing, mean-free and L2-normalized.

    A stand-in with the same wire behavior as a pretrained encoder: fixed
    dimension, deterministic vectors, order-preserving batches.
    """

    def __init__(self, dimension: int = 384):
        if dimension <= 0:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self.model_id = f"hash:{dimension}"
        self.dimension = dimension

    def _encode_one(self, text: str) -> np.ndarray:
        tokens = _TOKEN.findall(text[:MAX_TEXT_CHARS].lower())
        vec = np.zeros(self.dimension, dtype=np.float64)
        for feature in tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]:
            digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=9).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dimension
            vec[bucket] += 1.0 if digest[8] % 2 == 0 else -1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec

    def encode_batch(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dimension), dtype=np.float64)
        return np.stack([self._encode_one(t) for t in texts])


class SentenceTransformerEncoder:
    """Mean-pooled, L2-normalized embeddings from a pretrained model (inference only)."""

    def __init__(self, model_id: str):
        from sentence_transformers import SentenceTransformer

        self.model_id = model_id
        self._model = SentenceTransformer(model_id)
        self._model.eval()
        self.dimension = int(self._model.get_sentence_embedding_dimension())

    def encode_batch(self, texts: Sequence[str]) -> np.ndarray:
        clipped = [t[:MAX_TEXT_CHARS] for t in texts]
        vectors = self._model.encode(
            clipped, convert_to_numpy=True, normalize_embeddings=True, show_progress_bar=False
        )
        return np.asarray(vectors, dtype=np.float64)


def load_encoder(model_id: str) -> Encoder:
    if model_id == "hash" or model_id.startswith("hash:"):
        dim = int(model_id.split(":", 1)[1]) if ":" in model_id else 384
        return HashingSentenceEncoder(dimension=dim)
    return SentenceTransformerEncoder(model_id)
