from explsearch.backend import CompletionRequest
from explsearch.cache import CachedBackend, CompletionCache, cache_lookup_or_call
from explsearch.formats import render_prompt
from explsearch.samples import GSM_FORMAT
from explsearch.simulated import SimulatedBackend, SimulatedModelSpec


def make_backend():
    return SimulatedBackend(SimulatedModelSpec(rng_seed=1), GSM_FORMAT)


def make_request(temperature=0.7):
    prompt = render_prompt(GSM_FORMAT, [("What gives 3?", "It is 3.", "3")], "What is 1+2?")
    n = 1 if temperature == 0 else 4
    return CompletionRequest(prompt=prompt, temperature=temperature, num_samples=n)


def test_miss_then_hit_performs_zero_backend_calls(tmp_path):
    cache = CompletionCache(tmp_path)
    backend = make_backend()
    request = make_request()
    first = cache_lookup_or_call(cache, backend, request)
    assert backend.calls == 1
    second = cache_lookup_or_call(cache, backend, request)
    assert backend.calls == 1
    assert second == first


def test_requests_differing_only_in_temperature_have_distinct_keys(tmp_path):
    cache = CompletionCache(tmp_path)
    backend = make_backend()
    key_a = cache.completion_key(backend.backend_id, make_request(0.7))
    key_b = cache.completion_key(backend.backend_id, make_request(0.30001))
    assert key_a != key_b


def test_ledger_unchanged_by_cache_hit(tmp_path):
    cache = CompletionCache(tmp_path)
    backend = make_backend()
    request = make_request()
    cache_lookup_or_call(cache, backend, request)
    before = backend.usage.snapshot()
    cache_lookup_or_call(cache, backend, request)
    assert backend.usage.snapshot() == before


def test_corrupt_entry_recomputed(tmp_path, caplog):
    cache = CompletionCache(tmp_path)
    backend = make_backend()
    request = make_request()
    expected = cache_lookup_or_call(cache, backend, request)
    key = cache.completion_key(backend.backend_id, request)
    (tmp_path / f"{key}.json").write_text("{ not json !", encoding="utf-8")
    with caplog.at_level("WARNING"):
        again = cache_lookup_or_call(cache, backend, request)
    assert again == expected
    assert backend.calls == 2
    assert any("corrupt" in rec.message for rec in caplog.records)


def test_cached_backend_scores(tmp_path):
    backend = make_backend()
    cached = CachedBackend(backend, CompletionCache(tmp_path))
    prompt = make_request().prompt
    first = cached.score_continuation(prompt, " so. The answer is 3.")
    calls = backend.calls
    second = cached.score_continuation(prompt, " so. The answer is 3.")
    assert backend.calls == calls
    assert second == first


def test_cached_backend_identity_passthrough(tmp_path):
    backend = make_backend()
    cached = CachedBackend(backend, CompletionCache(tmp_path))
    assert cached.backend_id == backend.backend_id
    assert cached.usage is backend.usage
