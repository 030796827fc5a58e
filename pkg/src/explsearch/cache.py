"""On-disk completion cache.

Keys are hex digests of (backend identity, all request fields); values are the
serialized completion lists. The store is a flat directory of JSON files, safe
to delete wholesale, with atomic last-writer-wins updates so concurrent
writers of identical content cannot corrupt each other.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path

from .backend import Backend, Completion, CompletionRequest

log = logging.getLogger(__name__)


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class CompletionCache:
    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def completion_key(self, backend_id: str, request: CompletionRequest) -> str:
        return _digest({"kind": "complete", "backend": backend_id, **request.to_key_dict()})

    def score_key(self, backend_id: str, prompt: str, continuation: str) -> str:
        return _digest(
            {"kind": "score", "backend": backend_id, "prompt": prompt, "continuation": continuation}
        )

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def _read(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return json.load(fh)
        except (ValueError, OSError) as exc:
            log.warning("discarding corrupt cache entry %s (%s)", path.name, exc)
            try:
                path.unlink()
            except OSError:
                pass
            return None

    def _write(self, key: str, payload: dict) -> None:
        path = self._path(key)
        tmp = path.with_suffix(f".tmp.{os.getpid()}")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, ensure_ascii=False)
        os.replace(tmp, path)

    def get_completions(self, key: str) -> list[Completion] | None:
        payload = self._read(key)
        if payload is None:
            return None
        try:
            return [
                Completion(
                    text=item["text"],
                    total_logprob=float(item["total_logprob"]),
                    token_count=int(item["token_count"]),
                )
                for item in payload["completions"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            log.warning("discarding malformed cache entry %s (%s)", key, exc)
            return None

    def put_completions(self, key: str, completions: list[Completion]) -> None:
        self._write(
            key,
            {
                "completions": [
                    {
                        "text": c.text,
                        "total_logprob": c.total_logprob,
                        "token_count": c.token_count,
                    }
                    for c in completions
                ]
            },
        )

    def get_score(self, key: str) -> float | None:
        payload = self._read(key)
        if payload is None:
            return None
        try:
            return float(payload["score"])
        except (KeyError, TypeError, ValueError):
            log.warning("discarding malformed cache entry %s", key)
            return None

    def put_score(self, key: str, score: float) -> None:
        self._write(key, {"score": score})


def cache_lookup_or_call(
    cache: CompletionCache, backend: Backend, request: CompletionRequest
) -> list[Completion]:
    """Return cached completions for the request, calling the backend on a miss."""
    key = cache.completion_key(backend.backend_id, request)
    hit = cache.get_completions(key)
    if hit is not None:
        return hit
    completions = backend.complete(request)
    cache.put_completions(key, completions)
    return completions


class CachedBackend:
    """Backend wrapper that serves repeat requests from the on-disk cache.

    Cache hits perform zero inner-backend calls and record zero new usage, so
    a warm-cache pipeline re-run is free and byte-identical.
    """

    def __init__(self, inner: Backend, cache: CompletionCache) -> None:
        self.inner = inner
        self.cache = cache

    @property
    def backend_id(self) -> str:
        return self.inner.backend_id

    @property
    def usage(self):
        return self.inner.usage

    def complete(self, request: CompletionRequest) -> list[Completion]:
        return cache_lookup_or_call(self.cache, self.inner, request)

    def score_continuation(
        self, prompt: str, continuation: str, *, example_count: int = 2
    ) -> float:
        key = self.cache.score_key(self.inner.backend_id, prompt, continuation)
        hit = self.cache.get_score(key)
        if hit is not None:
            return hit
        score = self.inner.score_continuation(prompt, continuation, example_count=example_count)
        self.cache.put_score(key, score)
        return score
