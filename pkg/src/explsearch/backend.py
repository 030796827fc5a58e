"""Uniform contract for black-box completion models.

Backends expose two operations: `complete` (sampled or greedy generation) and
`score_continuation` (summed token log-probability of a fixed continuation).
All usage is metered in an atomically-updated ledger, in both token counts and
"examples processed" (shots in the prompt plus one output per query).
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol

log = logging.getLogger(__name__)


class BackendError(Exception):
    """Base class for backend failures."""


class RetryableBackendError(BackendError):
    """Transient transport or rate-limit failure; retried with backoff."""


class ProtocolError(BackendError):
    """The backend returned a response we cannot interpret."""


class CapabilityError(BackendError):
    """The backend does not support the requested operation."""


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    num_samples: int = 1
    max_tokens: int = 256
    stop: str | None = None
    want_logprobs: bool = False
    seed: int | None = None
    # shots in the prompt + 1 output; client-side accounting metadata
    example_count: int = 1

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.num_samples < 1:
            raise ValueError("num_samples must be positive")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.temperature == 0 and self.num_samples != 1:
            raise ValueError("greedy decoding (temperature 0) requires num_samples = 1")
        if self.example_count < 1:
            raise ValueError("example_count must be positive")

    def to_key_dict(self) -> dict:
        """All fields that distinguish one request from another, for cache keys."""
        return {
            "prompt": self.prompt,
            "temperature": self.temperature,
            "num_samples": self.num_samples,
            "max_tokens": self.max_tokens,
            "stop": self.stop,
            "want_logprobs": self.want_logprobs,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Completion:
    text: str
    total_logprob: float
    token_count: int


@dataclass(frozen=True)
class UsageRecord:
    prompt_tokens: int = 0
    completion_tokens: int = 0
    examples_processed: int = 0
    calls: int = 0

    def to_dict(self) -> dict:
        return {
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "examples_processed": self.examples_processed,
            "calls": self.calls,
        }


class UsageLedger:
    """Monotone usage accumulator, safe under concurrent backend calls."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._prompt_tokens = 0
        self._completion_tokens = 0
        self._examples = 0
        self._calls = 0

    def add(self, prompt_tokens: int, completion_tokens: int, examples: int) -> None:
        if min(prompt_tokens, completion_tokens, examples) < 0:
            raise ValueError("usage increments must be non-negative")
        with self._lock:
            self._prompt_tokens += prompt_tokens
            self._completion_tokens += completion_tokens
            self._examples += examples
            self._calls += 1

    def snapshot(self) -> UsageRecord:
        with self._lock:
            return UsageRecord(
                prompt_tokens=self._prompt_tokens,
                completion_tokens=self._completion_tokens,
                examples_processed=self._examples,
                calls=self._calls,
            )


class Backend(Protocol):
    usage: UsageLedger

    @property
    def backend_id(self) -> str: ...

    def complete(self, request: CompletionRequest) -> list[Completion]: ...

    def score_continuation(
        self, prompt: str, continuation: str, *, example_count: int = 2
    ) -> float: ...


def pass_cost(m: int, k: int) -> int:
    """Examples processed by one objective evaluation: M queries, K shots + 1 output each."""
    if m < 1 or k < 1:
        raise ValueError("pass_cost requires M >= 1 and K >= 1")
    return m * (k + 1)


def count_tokens(text: str) -> int:
    """Whitespace word count; the stand-in tokenizer for simulated costs."""
    return len(text.split())


# transport: (url, headers, json_payload, timeout) -> (status_code, parsed_body)
Transport = Callable[[str, dict, dict, float], tuple[int, dict]]


def _requests_transport(url: str, headers: dict, payload: dict, timeout: float) -> tuple[int, dict]:
    import requests

    try:
        resp = requests.post(url, headers=headers, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise RetryableBackendError(str(exc)) from exc
    try:
        body = resp.json()
    except ValueError as exc:
        raise ProtocolError(f"non-JSON response (HTTP {resp.status_code})") from exc
    return resp.status_code, body


class HTTPCompletionBackend:
    """Client for a completions-style HTTP endpoint.

    The request carries prompt, temperature, n, max_tokens, stop and a
    logprobs flag; the response is expected to carry per-choice text and token
    logprobs plus a usage object. Scoring works by echoing the prompt +
    continuation with logprobs and summing the continuation's token logprobs.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        max_retries: int = 3,
        backoff_seconds: float = 1.0,
        timeout: float = 60.0,
        transport: Transport | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self.timeout = timeout
        self.transport = transport or _requests_transport
        self.usage = UsageLedger()

    @property
    def backend_id(self) -> str:
        return f"http:{self.base_url}:{self.model}"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, payload: dict) -> dict:
        url = f"{self.base_url}/completions"
        delay = self.backoff_seconds
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                status, body = self.transport(url, self._headers(), payload, self.timeout)
            except RetryableBackendError as exc:
                last_error = exc
            else:
                if status == 429 or status >= 500:
                    last_error = RetryableBackendError(f"HTTP {status}")
                elif status >= 400:
                    raise ProtocolError(f"HTTP {status}: {body}")
                else:
                    return body
            if attempt + 1 < self.max_retries:
                log.warning("backend call failed (%s), retrying in %.1fs", last_error, delay)
                time.sleep(delay)
                delay *= 2
        raise BackendError(f"backend failed after {self.max_retries} attempts: {last_error}")

    def _record_usage(self, body: dict, example_count: int) -> None:
        usage = body.get("usage", {})
        self.usage.add(
            int(usage.get("prompt_tokens", 0)),
            int(usage.get("completion_tokens", 0)),
            example_count,
        )

    def complete(self, request: CompletionRequest) -> list[Completion]:
        payload = {
            "model": self.model,
            "prompt": request.prompt,
            "temperature": request.temperature,
            "n": request.num_samples,
            "max_tokens": request.max_tokens,
        }
        if request.stop is not None:
            payload["stop"] = request.stop
        if request.want_logprobs:
            payload["logprobs"] = 1
        body = self._post(payload)
        try:
            choices = body["choices"]
            completions = []
            for choice in choices:
                logprobs = choice.get("logprobs") or {}
                token_lps = [lp for lp in logprobs.get("token_logprobs", []) if lp is not None]
                completions.append(
                    Completion(
                        text=choice["text"],
                        total_logprob=float(sum(token_lps)),
                        token_count=len(logprobs.get("tokens", [])) or count_tokens(choice["text"]),
                    )
                )
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed completion response: {exc}") from exc
        if len(completions) != request.num_samples:
            raise ProtocolError(
                f"expected {request.num_samples} choices, got {len(completions)}"
            )
        self._record_usage(body, request.example_count)
        return completions

    def score_continuation(
        self, prompt: str, continuation: str, *, example_count: int = 2
    ) -> float:
        if not continuation:
            raise ValueError("continuation must be non-empty")
        payload = {
            "model": self.model,
            "prompt": prompt + continuation,
            "temperature": 0,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
        }
        body = self._post(payload)
        try:
            choice = body["choices"][0]
            logprobs = choice.get("logprobs")
            if not logprobs or "token_logprobs" not in logprobs or "text_offset" not in logprobs:
                raise CapabilityError("endpoint does not return echoed token logprobs")
            offsets = logprobs["text_offset"]
            token_lps = logprobs["token_logprobs"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed scoring response: {exc}") from exc
        boundary = len(prompt)
        total = 0.0
        for offset, lp in zip(offsets, token_lps):
            if offset >= boundary and lp is not None:
                total += lp
        self._record_usage(body, example_count)
        return total


def make_request_greedy(prompt: str, *, max_tokens: int = 256, stop: str | None = None,
                        example_count: int = 1) -> CompletionRequest:
    return CompletionRequest(
        prompt=prompt,
        temperature=0.0,
        num_samples=1,
        max_tokens=max_tokens,
        stop=stop,
        example_count=example_count,
    )
