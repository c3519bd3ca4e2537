"""Uniform chat-completion interface: providers, retries, rate limiting, cache, replay."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import requests

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE_CEILING = 0.3
DEFAULT_MAX_OUTPUT_TOKENS = 2048
DEFAULT_MAX_IN_FLIGHT = 4

# Matched against the lowercased start of a reply; deliberately prefix-based so
# a translation QUOTING an apology is not misclassified.
DEFAULT_REFUSAL_PATTERNS = (
    "i'm sorry",
    "i am sorry",
    "i apologize",
    "i cannot",
    "i can't",
    "i am unable",
    "i'm unable",
    "as an ai",
)

RETRYABLE_STATUSES = {408, 409, 429, 500, 502, 503, 504}


class GatewayError(Exception):
    pass


class UnknownModel(GatewayError):
    def __init__(self, model_id: str):
        super().__init__(f"no provider configured for model {model_id!r}")
        self.model_id = model_id


class MissingCredentials(GatewayError):
    def __init__(self, env_var: str):
        super().__init__(f"credentials required: set {env_var}")
        self.env_var = env_var


class ProviderError(GatewayError):
    def __init__(self, status: int, body: str):
        super().__init__(f"provider error {status}: {body[:200]}")
        self.status = status
        self.body = body

    @property
    def retryable(self) -> bool:
        return self.status in RETRYABLE_STATUSES


class ReplayMiss(ProviderError):
    """Replay provider has no fixture for the request digest."""

    def __init__(self, digest: str):
        super().__init__(0, f"no replay fixture for digest {digest}")
        self.digest = digest

    @property
    def retryable(self) -> bool:
        return False


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    system_prompt: str
    user_prompt: str
    temperature: float = 0.0
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def __post_init__(self):
        if not self.system_prompt or not self.user_prompt:
            raise ValueError("prompts must be non-empty")
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 1]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    model_id: str
    latency_ms: float
    cached: bool
    refusal: bool = False


@dataclass(frozen=True)
class CacheKey:
    digest: str


def canonical_request(req: ChatRequest) -> str:
    """Stable serialization of the digest-relevant request fields.

    Compact JSON with sorted keys and raw (non-ascii-escaped) UTF-8;
    max_output_tokens deliberately excluded so output-length tuning does not
    invalidate cached completions.
    """
    return json.dumps(
        {
            "model_id": req.model_id,
            "system_prompt": req.system_prompt,
            "temperature": req.temperature,
            "user_prompt": req.user_prompt,
        },
        sort_keys=True,
        ensure_ascii=False,
        separators=(",", ":"),
    )


def cache_key(req: ChatRequest) -> CacheKey:
    digest = hashlib.sha256(canonical_request(req).encode("utf-8")).hexdigest()
    return CacheKey(digest=digest)


class ReplayProvider:
    """Deterministic test-time backend: completions keyed by request digest."""

    from_store = True

    def __init__(self, fixtures: dict[str, str] | str | Path):
        if isinstance(fixtures, dict):
            self._fixtures = dict(fixtures)
        else:
            self._fixtures = load_record_file(fixtures)

    def complete(self, req: ChatRequest) -> str:
        digest = cache_key(req).digest
        if digest not in self._fixtures:
            raise ReplayMiss(digest)
        return self._fixtures[digest]


class CallableProvider:
    """Wraps a plain function; handy for scripted tests."""

    from_store = False

    def __init__(self, fn: Callable[[ChatRequest], str]):
        self._fn = fn

    def complete(self, req: ChatRequest) -> str:
        return self._fn(req)


class HttpProvider:
    """OpenAI-style chat-completions endpoint; one instance per provider name.

    The API key comes from MAATS_API_KEY_<NAME> (name uppercased).
    """

    from_store = False

    def __init__(self, name: str, endpoint: str, timeout_s: float = 60.0):
        self.name = name
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    @property
    def env_var(self) -> str:
        return f"MAATS_API_KEY_{self.name.upper()}"

    def complete(self, req: ChatRequest) -> str:
        api_key = os.environ.get(self.env_var)
        if not api_key:
            raise MissingCredentials(self.env_var)
        payload = {
            "model": req.model_id,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_prompt},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        try:
            resp = requests.post(
                self.endpoint,
                json=payload,
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise ProviderError(503, f"transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(resp.status_code, resp.text)
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(200, f"malformed completion payload: {resp.text[:200]}") from exc


def load_record_file(path: str | Path) -> dict[str, str]:
    """Load line-delimited {digest, text} records; last write wins."""
    records: dict[str, str] = {}
    path = Path(path)
    if not path.exists():
        return records
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                records[rec["digest"]] = rec["text"]
            except (ValueError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed cache record") from exc
    return records


class Gateway:
    """Routes requests to providers with retry, rate limiting, and caching.

    Thread-safe: many tasks may call complete concurrently; cache writes go
    through a single lock, and each provider gets a bounded in-flight slot
    pool so upstream rate limits are respected.
    """

    def __init__(
        self,
        providers: dict[str, object],
        cache_path: str | Path | None = None,
        temperature_ceiling: float = DEFAULT_TEMPERATURE_CEILING,
        max_retries: int = 3,
        backoff_base_s: float = 0.25,
        backoff_cap_s: float = 8.0,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        refusal_patterns: tuple[str, ...] = DEFAULT_REFUSAL_PATTERNS,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._providers = dict(providers)
        self._cache_path = Path(cache_path) if cache_path else None
        self._cache = load_record_file(self._cache_path) if self._cache_path else {}
        self.temperature_ceiling = temperature_ceiling
        self.max_retries = max_retries
        self.backoff_base_s = backoff_base_s
        self.backoff_cap_s = backoff_cap_s
        self.refusal_patterns = tuple(p.lower() for p in refusal_patterns)
        self._sleep = sleep
        self._write_lock = threading.Lock()
        self._slots: dict[int, threading.BoundedSemaphore] = {}
        for p in self._providers.values():
            self._slots.setdefault(id(p), threading.BoundedSemaphore(max_in_flight))
        self.call_count = 0
        self._count_lock = threading.Lock()

    def is_refusal(self, text: str) -> bool:
        head = text.strip().lower()
        return any(head.startswith(p) for p in self.refusal_patterns)

    def complete(self, req: ChatRequest) -> ChatResponse:
        provider = self._providers.get(req.model_id)
        if provider is None:
            raise UnknownModel(req.model_id)
        if req.temperature > self.temperature_ceiling:
            raise ValueError(
                f"temperature {req.temperature} above ceiling {self.temperature_ceiling}"
            )
        with self._count_lock:
            self.call_count += 1

        digest = cache_key(req).digest
        cached_text = self._cache.get(digest)
        if cached_text is not None:
            return ChatResponse(
                text=cached_text,
                model_id=req.model_id,
                latency_ms=0.0,
                cached=True,
                refusal=self.is_refusal(cached_text),
            )

        start = time.monotonic()
        text = self._call_with_retry(provider, req, digest)
        latency_ms = (time.monotonic() - start) * 1000.0

        self._store(digest, text)
        return ChatResponse(
            text=text,
            model_id=req.model_id,
            latency_ms=latency_ms,
            cached=bool(getattr(provider, "from_store", False)),
            refusal=self.is_refusal(text),
        )

    def _call_with_retry(self, provider, req: ChatRequest, digest: str) -> str:
        slot = self._slots[id(provider)]
        attempt = 0
        while True:
            try:
                with slot:
                    return provider.complete(req)
            except ProviderError as exc:
                if not exc.retryable or attempt >= self.max_retries:
                    raise
                delay = min(self.backoff_base_s * (2 ** attempt), self.backoff_cap_s)
                logger.warning(
                    "retry %d/%d for %s after status %s (sleep %.2fs)",
                    attempt + 1, self.max_retries, digest[:12], exc.status, delay,
                )
                self._sleep(delay)
                attempt += 1

    def _store(self, digest: str, text: str) -> None:
        with self._write_lock:
            self._cache[digest] = text
            if self._cache_path is not None:
                self._cache_path.parent.mkdir(parents=True, exist_ok=True)
                with self._cache_path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"digest": digest, "text": text}, ensure_ascii=False))
                    fh.write("\n")

    def cached_digests(self) -> set[str]:
        return set(self._cache)
