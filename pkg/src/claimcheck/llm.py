"""LLM backend facade: live HTTP mode plus a deterministic record/replay cache.

The cache file is line-delimited JSON, one record per completion:
``{"digest", "template_id", "prompt", "temperature", "max_tokens", "text"}``.
Storing the full request alongside the digest keeps fixtures auditable and turns
a (nominally impossible) digest collision into a loud error instead of a silent
wrong answer.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Protocol

logger = logging.getLogger(__name__)

Mode = Literal["live", "replay", "record"]

ENV_BASE_URL = "CLAIMCHECK_LLM_URL"
ENV_MODEL = "CLAIMCHECK_LLM_MODEL"
ENV_API_KEY = "CLAIMCHECK_LLM_API_KEY"


class LlmError(Exception):
    """Base class for backend failures."""


class CacheMiss(LlmError):
    """Replay mode was asked for a request that was never recorded."""


class BackendUnavailable(LlmError):
    """Live backend kept failing after retries."""


@dataclass(frozen=True)
class LlmRequest:
    template_id: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("rendered prompt must be non-empty")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    provenance: Literal["live", "cache"]
    latency: float = 0.0


def request_digest(request: LlmRequest) -> str:
    """SHA-256 hex digest over the canonical JSON serialization of the request.

    Stable across runs and platforms: keys are sorted, floats use repr semantics,
    and the serialization is pure ASCII.
    """
    canonical = json.dumps(
        {
            "max_tokens": request.max_tokens,
            "prompt": request.prompt,
            "template_id": request.template_id,
            "temperature": request.temperature,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=True,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReplayCache:
    """Persistent digest -> completion map backed by an append-only JSONL file.

    Reads are lock-free after load; writes are serialized by a lock and appended
    as whole lines, so concurrent completes cannot interleave partial records.
    Re-recording an existing digest is an idempotent no-op.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        assert self.path is not None
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{self.path}:{lineno}: bad cache record: {exc}") from exc
                self._entries[record["digest"]] = record

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, request: LlmRequest) -> str | None:
        digest = request_digest(request)
        record = self._entries.get(digest)
        if record is None:
            return None
        if record.get("prompt") != request.prompt or record.get("template_id") != request.template_id:
            raise LlmError(f"digest collision for {digest}: cached request differs")
        return record["text"]

    def put(self, request: LlmRequest, text: str) -> None:
        digest = request_digest(request)
        record = {
            "digest": digest,
            "template_id": request.template_id,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "text": text,
        }
        with self._lock:
            if digest in self._entries:
                return
            self._entries[digest] = record
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")


@dataclass
class HttpConfig:
    """Chat-completion style endpoint. The request body is
    ``{"model", "messages": [{"role": "user", "content": prompt}], "temperature",
    "max_tokens"}`` and the reply text is read from
    ``choices[0].message.content``."""

    base_url: str
    model: str
    api_key: str = ""
    timeout: float = 60.0

    @classmethod
    def from_env(cls) -> "HttpConfig":
        base_url = os.environ.get(ENV_BASE_URL, "")
        if not base_url:
            raise BackendUnavailable(f"{ENV_BASE_URL} is not set; cannot reach a live backend")
        return cls(
            base_url=base_url,
            model=os.environ.get(ENV_MODEL, "default"),
            api_key=os.environ.get(ENV_API_KEY, ""),
        )


class LlmBackend(Protocol):
    def complete(self, request: LlmRequest) -> LlmResponse: ...


class LlmClient:
    """Thread-safe completion facade with bounded in-flight live requests."""

    def __init__(
        self,
        mode: Mode = "replay",
        cache: ReplayCache | None = None,
        http: HttpConfig | None = None,
        max_retries: int = 2,
        max_in_flight: int = 4,
        backoff: float = 0.5,
    ):
        if mode in ("replay", "record") and cache is None:
            raise ValueError(f"{mode} mode requires a cache")
        self.mode = mode
        self.cache = cache
        self.http = http
        self.max_retries = max_retries
        self.backoff = backoff
        self._sem = threading.BoundedSemaphore(max_in_flight)

    def complete(self, request: LlmRequest) -> LlmResponse:
        start = time.monotonic()
        if self.mode in ("replay", "record") and self.cache is not None:
            cached = self.cache.get(request)
            if cached is not None:
                return LlmResponse(text=cached, provenance="cache", latency=time.monotonic() - start)
            if self.mode == "replay":
                raise CacheMiss(
                    f"no cached completion for template {request.template_id!r} "
                    f"(digest {request_digest(request)})"
                )
        text = self._call_live(request)
        if self.mode == "record" and self.cache is not None:
            self.cache.put(request, text)
        return LlmResponse(text=text, provenance="live", latency=time.monotonic() - start)

    def _call_live(self, request: LlmRequest) -> str:
        import requests as _requests  # deferred so offline use never needs it

        http = self.http or HttpConfig.from_env()
        url = http.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if http.api_key:
            headers["Authorization"] = f"Bearer {http.api_key}"
        body = {
            "model": http.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                with self._sem:
                    resp = _requests.post(url, json=body, headers=headers, timeout=http.timeout)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - every transport error is retryable
                last_error = exc
                logger.warning("live LLM call failed (attempt %d): %s", attempt + 1, exc)
        raise BackendUnavailable(f"live backend failed after {self.max_retries + 1} attempts") from last_error
