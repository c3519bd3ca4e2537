import json
import threading

import pytest

from maats.gateway import (
    CallableProvider,
    ChatRequest,
    Gateway,
    MissingCredentials,
    HttpProvider,
    ProviderError,
    ReplayMiss,
    ReplayProvider,
    UnknownModel,
    cache_key,
    canonical_request,
    load_record_file,
)

REQ = ChatRequest(
    model_id="test-model",
    system_prompt="You are a careful assistant for machine translation workflows.",
    user_prompt="Translate the following from English to German:\n\nHello",
    temperature=0.0,
)

# sha256 of the canonical serialization of REQ, computed with a standalone
# sha256 tool before this module was written
REQ_DIGEST = "e7f786d4233ac398155de31673d03c3db7985711003aa5d55b4090e0c171a58e"


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest(model_id="m", system_prompt="", user_prompt="u")
    with pytest.raises(ValueError):
        ChatRequest(model_id="m", system_prompt="s", user_prompt="u", temperature=1.2)
    with pytest.raises(ValueError):
        ChatRequest(model_id="m", system_prompt="s", user_prompt="u", max_output_tokens=0)


def test_cache_key_matches_independent_sha256():
    assert cache_key(REQ).digest == REQ_DIGEST


def test_cache_key_deterministic_and_field_sensitive():
    assert cache_key(REQ) == cache_key(REQ)
    warm = ChatRequest(
        model_id=REQ.model_id,
        system_prompt=REQ.system_prompt,
        user_prompt=REQ.user_prompt,
        temperature=0.3,
    )
    assert cache_key(warm).digest != REQ_DIGEST
    other_model = ChatRequest(
        model_id="other",
        system_prompt=REQ.system_prompt,
        user_prompt=REQ.user_prompt,
    )
    assert cache_key(other_model).digest != REQ_DIGEST


def test_canonical_request_excludes_token_budget():
    a = canonical_request(REQ)
    b = canonical_request(
        ChatRequest(
            model_id=REQ.model_id,
            system_prompt=REQ.system_prompt,
            user_prompt=REQ.user_prompt,
            max_output_tokens=9,
        )
    )
    assert a == b


def test_replay_provider_returns_fixture_with_cached_flag():
    gateway = Gateway({"test-model": ReplayProvider({REQ_DIGEST: "Hallo"})})
    resp = gateway.complete(REQ)
    assert resp.text == "Hallo"
    assert resp.cached is True
    assert resp.refusal is False


def test_replay_provider_miss_is_descriptive():
    gateway = Gateway({"test-model": ReplayProvider({})})
    with pytest.raises(ReplayMiss):
        gateway.complete(REQ)


def test_unknown_model():
    gateway = Gateway({"test-model": ReplayProvider({})})
    with pytest.raises(UnknownModel):
        gateway.complete(
            ChatRequest(model_id="x-1", system_prompt="s", user_prompt="u")
        )


def test_temperature_ceiling_enforced():
    gateway = Gateway({"m": CallableProvider(lambda r: "ok")})
    with pytest.raises(ValueError):
        gateway.complete(
            ChatRequest(model_id="m", system_prompt="s", user_prompt="u", temperature=0.5)
        )


def test_cache_hit_on_second_call(tmp_path):
    calls = []

    def fn(req):
        calls.append(req)
        return "answer"

    cache_file = tmp_path / "cache.jsonl"
    gateway = Gateway({"m": CallableProvider(fn)}, cache_path=cache_file)
    req = ChatRequest(model_id="m", system_prompt="s", user_prompt="u")
    first = gateway.complete(req)
    second = gateway.complete(req)
    assert first.text == second.text == "answer"
    assert first.cached is False and second.cached is True
    assert len(calls) == 1
    # a fresh gateway replays the persisted cache without any provider call
    fresh = Gateway({"m": CallableProvider(fn)}, cache_path=cache_file)
    assert fresh.complete(req).cached is True
    assert len(calls) == 1


def test_cache_file_last_write_wins(tmp_path):
    cache_file = tmp_path / "cache.jsonl"
    with cache_file.open("w") as fh:
        fh.write(json.dumps({"digest": "d1", "text": "old"}) + "\n")
        fh.write(json.dumps({"digest": "d1", "text": "new"}) + "\n")
    assert load_record_file(cache_file) == {"d1": "new"}


def test_retry_then_success_writes_cache_once(tmp_path):
    attempts = []

    def flaky(req):
        attempts.append(1)
        if len(attempts) < 3:
            raise ProviderError(503, "busy")
        return "done"

    cache_file = tmp_path / "cache.jsonl"
    gateway = Gateway(
        {"m": CallableProvider(flaky)},
        cache_path=cache_file,
        sleep=lambda s: None,
    )
    resp = gateway.complete(ChatRequest(model_id="m", system_prompt="s", user_prompt="u"))
    assert resp.text == "done"
    assert len(attempts) == 3
    lines = [l for l in cache_file.read_text().splitlines() if l.strip()]
    assert len(lines) == 1


def test_retries_exhausted_raises_provider_error():
    def always_busy(req):
        raise ProviderError(429, "rate limited")

    gateway = Gateway(
        {"m": CallableProvider(always_busy)}, max_retries=2, sleep=lambda s: None
    )
    with pytest.raises(ProviderError) as excinfo:
        gateway.complete(ChatRequest(model_id="m", system_prompt="s", user_prompt="u"))
    assert excinfo.value.status == 429


def test_non_retryable_fails_fast():
    attempts = []

    def bad_request(req):
        attempts.append(1)
        raise ProviderError(400, "bad request")

    gateway = Gateway({"m": CallableProvider(bad_request)}, sleep=lambda s: None)
    with pytest.raises(ProviderError):
        gateway.complete(ChatRequest(model_id="m", system_prompt="s", user_prompt="u"))
    assert len(attempts) == 1


def test_refusal_detection():
    gateway = Gateway({"m": CallableProvider(lambda r: "I'm sorry, I can't translate that.")})
    resp = gateway.complete(ChatRequest(model_id="m", system_prompt="s", user_prompt="u"))
    assert resp.refusal is True
    # a translation merely containing an apology is not a refusal
    gateway2 = Gateway({"m": CallableProvider(lambda r: 'He said "I\'m sorry" softly.')})
    resp2 = gateway2.complete(ChatRequest(model_id="m", system_prompt="s", user_prompt="u"))
    assert resp2.refusal is False


def test_http_provider_requires_credentials(monkeypatch):
    monkeypatch.delenv("MAATS_API_KEY_ACME", raising=False)
    provider = HttpProvider(name="acme", endpoint="http://localhost:1/v1/chat/completions")
    with pytest.raises(MissingCredentials):
        provider.complete(ChatRequest(model_id="m", system_prompt="s", user_prompt="u"))


def test_in_flight_requests_bounded_per_provider():
    import time

    active = []
    peak = []
    lock = threading.Lock()

    def slow(req):
        with lock:
            active.append(1)
            peak.append(len(active))
        time.sleep(0.02)
        with lock:
            active.pop()
        return "ok"

    gateway = Gateway({"m": CallableProvider(slow)}, max_in_flight=2)
    requests_ = [
        ChatRequest(model_id="m", system_prompt="s", user_prompt=f"p{i}")
        for i in range(8)
    ]
    threads = [
        threading.Thread(target=gateway.complete, args=(r,)) for r in requests_
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert max(peak) <= 2


def test_concurrent_calls_are_pure_with_replay():
    fixtures = {}
    requests = [
        ChatRequest(model_id="m", system_prompt="s", user_prompt=f"prompt {i}")
        for i in range(20)
    ]
    for i, req in enumerate(requests):
        fixtures[cache_key(req).digest] = f"reply {i}"
    gateway = Gateway({"m": ReplayProvider(fixtures)})

    results = {}

    def worker(i, req):
        results[i] = gateway.complete(req).text

    threads = [threading.Thread(target=worker, args=(i, r)) for i, r in enumerate(requests)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == {i: f"reply {i}" for i in range(20)}
    assert gateway.call_count == 20
