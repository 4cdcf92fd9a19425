"""Text-to-vector providers for the judge head.

The default provider is a deterministic hashing featurizer so the whole test
suite runs without any external encoder. An HTTP provider speaks the encoder
service wire protocol (POST /encode, GET /health) when a real sentence encoder
is available.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np

from .retrieval import tokenize

DEFAULT_DIMENSION = 256


class EmbeddingProvider(Protocol):
    """Deterministic text encoder with a fixed output dimension."""

    @property
    def dimension(self) -> int: ...

    def encode(self, text: str) -> np.ndarray: ...


def _hash_feature(feature: str, dimension: int) -> tuple[int, float]:
    """Stable (bucket, sign) pair for a feature string, identical on any platform."""
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=9).digest()
    bucket = int.from_bytes(digest[:8], "big") % dimension
    sign = 1.0 if digest[8] % 2 == 0 else -1.0
    return bucket, sign


class HashingEncoder:
    """Token + bigram hashing into ``dimension`` signed buckets, L2-normalized.

    Never fails and never needs the network; the zero vector is returned for
    text with no tokens.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension <= 0:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self._dimension = dimension

    @property
    def dimension(self) -> int:
        return self._dimension

    def encode(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        vec = np.zeros(self._dimension, dtype=np.float64)
        features = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
        for feature in features:
            bucket, sign = _hash_feature(feature, self._dimension)
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec


class HttpEncoder:
    """Client for the encoder service; dimension is read from /health, never assumed."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._dimension = int(self._get_health()["dimension"])

    def _get_health(self) -> dict:
        import requests as _requests

        resp = _requests.get(f"{self.base_url}/health", timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()

    @property
    def dimension(self) -> int:
        return self._dimension

    def encode(self, text: str) -> np.ndarray:
        return self.encode_batch([text])[0]

    def encode_batch(self, texts: Sequence[str]) -> list[np.ndarray]:
        import requests as _requests

        resp = _requests.post(
            f"{self.base_url}/encode", json={"texts": list(texts)}, timeout=self.timeout
        )
        resp.raise_for_status()
        payload = resp.json()
        vectors = [np.asarray(v, dtype=np.float64) for v in payload["vectors"]]
        if len(vectors) != len(texts) or any(v.shape != (self._dimension,) for v in vectors):
            raise ValueError("encoder service returned a malformed batch")
        return vectors
