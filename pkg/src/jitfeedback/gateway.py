"""Pluggable completion backends behind a rate-limited, retrying dispatch
layer with explicit backpressure.

Admission control is a bounded in-system count: requests over capacity get
Busy immediately instead of queueing silently, backend attempts are paced by
a token bucket and capped by an in-flight semaphore, and retry exhaustion
surfaces as Degraded so callers can substitute fallback feedback.  Every
admitted request terminates in exactly one outcome.
"""

import asyncio
import json
import random
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Awaitable, Callable, Optional, Protocol, Sequence, runtime_checkable

import httpx

from .domain import stable_hash64
from .prompts import PromptText


@dataclass(frozen=True)
class CompletionRequest:
    prompt: PromptText
    max_tokens: int = 512
    temperature: float = 0.0
    timeout_s: float = 30.0
    idempotency_key: str = ""

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be > 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    backend_id: str
    elapsed_ms: int
    attempts: int


@dataclass(frozen=True)
class GatewayConfig:
    rate_limit_per_s: float = 20.0
    burst: int = 40
    max_in_flight: int = 32
    retry_limit: int = 2
    retry_backoff_ms: tuple[int, ...] = (250, 1000)
    queue_capacity: int = 256

    def __post_init__(self):
        if min(self.rate_limit_per_s, self.burst, self.max_in_flight, self.queue_capacity) <= 0:
            raise ValueError("rate, burst, max_in_flight and queue_capacity must be positive")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")
        if len(self.retry_backoff_ms) < self.retry_limit:
            raise ValueError("need a backoff entry for every retry")


class BackendError(RuntimeError):
    """The backend failed to produce a completion."""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.attempts = 1


class GatewayTimeout(RuntimeError):
    def __init__(self, detail: str):
        super().__init__(detail)
        self.attempts = 1


class BusyError(RuntimeError):
    """Queue full; the request was rejected before admission."""

    def __init__(self, retry_after_s: float = 1.0):
        super().__init__("gateway at capacity")
        self.retry_after_s = retry_after_s


class DegradedError(RuntimeError):
    """All attempts failed; caller should substitute fallback output."""

    def __init__(self, attempts: int):
        super().__init__(f"backend unavailable after {attempts} attempts")
        self.attempts = attempts


@runtime_checkable
class CompletionBackend(Protocol):
    backend_id: str
    concurrent_safe: bool

    async def complete(self, prompt_text: str, request: CompletionRequest) -> str: ...


class TokenBucket:
    """Async token bucket: capacity ``burst``, continuous refill at ``rate``/s."""

    def __init__(self, rate: float, burst: int, time_fn: Callable[[], float] = time.monotonic):
        self._rate = rate
        self._capacity = float(burst)
        self._tokens = float(burst)
        self._time_fn = time_fn
        self._last = time_fn()
        self._lock = asyncio.Lock()

    def _refill(self) -> None:
        now = self._time_fn()
        self._tokens = min(self._capacity, self._tokens + (now - self._last) * self._rate)
        self._last = now

    async def acquire(self) -> None:
        while True:
            async with self._lock:
                self._refill()
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self._rate
            await asyncio.sleep(wait)


async def complete(
    backend: CompletionBackend,
    request: CompletionRequest,
    *,
    retry_limit: int = 0,
    backoff_ms: Sequence[int] = (),
    before_attempt: Optional[Callable[[], Awaitable[None]]] = None,
    serialize_lock: Optional[asyncio.Lock] = None,
) -> CompletionResult:
    """Call the backend with a per-attempt timeout, retrying on failure.

    Raises BackendError or GatewayTimeout (carrying the attempt count) once
    retries are exhausted.
    """
    if len(backoff_ms) < retry_limit:
        raise ValueError("need a backoff entry for every retry")
    started = time.monotonic()
    attempts = 0
    while True:
        attempts += 1
        if before_attempt is not None:
            await before_attempt()
        try:
            call = backend.complete(request.prompt.text, request)
            if serialize_lock is not None:
                async with serialize_lock:
                    text = await asyncio.wait_for(call, request.timeout_s)
            else:
                text = await asyncio.wait_for(call, request.timeout_s)
            elapsed_ms = int((time.monotonic() - started) * 1000)
            return CompletionResult(
                text=text, backend_id=backend.backend_id, elapsed_ms=elapsed_ms, attempts=attempts
            )
        except asyncio.TimeoutError:
            error: RuntimeError = GatewayTimeout(f"backend call exceeded {request.timeout_s}s")
        except BackendError as exc:
            error = exc
        error.attempts = attempts
        if attempts > retry_limit:
            raise error
        await asyncio.sleep(backoff_ms[attempts - 1] / 1000.0)


class Gateway:
    """Shared dispatch layer; safe to call from any number of request handlers.

    Successful results are cached by idempotency key (bounded LRU) so client
    retries of an already-answered request do not consume backend budget.
    """

    _CACHE_CAPACITY = 4096

    def __init__(self, backend: CompletionBackend, config: GatewayConfig = GatewayConfig()):
        self._backend = backend
        self._config = config
        self._bucket = TokenBucket(config.rate_limit_per_s, config.burst)
        self._inflight = asyncio.Semaphore(config.max_in_flight)
        self._serialize_lock = None if backend.concurrent_safe else asyncio.Lock()
        self._in_system = 0
        self._cache: OrderedDict[str, CompletionResult] = OrderedDict()

    @property
    def config(self) -> GatewayConfig:
        return self._config

    @property
    def queue_depth(self) -> int:
        return self._in_system

    async def dispatch(self, request: CompletionRequest) -> CompletionResult:
        """Admit, rate-limit, call and retry; raises BusyError or DegradedError."""
        if request.idempotency_key:
            cached = self._cache.get(request.idempotency_key)
            if cached is not None:
                self._cache.move_to_end(request.idempotency_key)
                return cached
        # Single-threaded event loop: check-then-increment has no await between.
        if self._in_system >= self._config.queue_capacity:
            raise BusyError()
        self._in_system += 1
        try:
            async with self._inflight:
                result = await complete(
                    self._backend,
                    request,
                    retry_limit=self._config.retry_limit,
                    backoff_ms=self._config.retry_backoff_ms,
                    before_attempt=self._bucket.acquire,
                    serialize_lock=self._serialize_lock,
                )
        except (BackendError, GatewayTimeout) as exc:
            raise DegradedError(attempts=exc.attempts) from exc
        finally:
            self._in_system -= 1
        if request.idempotency_key:
            self._cache[request.idempotency_key] = result
            self._cache.move_to_end(request.idempotency_key)
            while len(self._cache) > self._CACHE_CAPACITY:
                self._cache.popitem(last=False)
        return result


@dataclass(frozen=True)
class ScriptedRule:
    """One matcher -> response entry; ``fail=True`` injects a BackendError."""

    response: Optional[str] = None
    contains: Optional[str] = None
    content_hash: Optional[int] = None
    fail: bool = False

    def matches(self, prompt_text: str, prompt_hash: int) -> bool:
        if self.contains is not None and self.contains not in prompt_text:
            return False
        if self.content_hash is not None and self.content_hash != prompt_hash:
            return False
        return True

    @classmethod
    def from_dict(cls, d: dict) -> "ScriptedRule":
        return cls(
            response=d.get("response"),
            contains=d.get("contains"),
            content_hash=d.get("content_hash"),
            fail=bool(d.get("fail", False)),
        )


class ScriptedBackend:
    """Deterministic test double: first matching rule wins.

    Optional fault injection: ``fail_rate`` draws from a seeded RNG before
    matching; ``latency_s`` sleeps before answering (interacts with the
    caller's timeout).
    """

    def __init__(
        self,
        rules: Sequence[ScriptedRule],
        *,
        fail_rate: float = 0.0,
        latency_s: float = 0.0,
        seed: int = 0,
        backend_id: str = "scripted",
        concurrent_safe: bool = True,
    ):
        self.backend_id = backend_id
        self.concurrent_safe = concurrent_safe
        self._rules = list(rules)
        self._fail_rate = fail_rate
        self._latency_s = latency_s
        self._rng = random.Random(seed)

    @classmethod
    def from_jsonl(cls, path: str | Path, **kwargs) -> "ScriptedBackend":
        rules = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rules.append(ScriptedRule.from_dict(json.loads(line)))
        return cls(rules, **kwargs)

    async def complete(self, prompt_text: str, request: CompletionRequest) -> str:
        if self._latency_s > 0:
            await asyncio.sleep(self._latency_s)
        if self._fail_rate > 0 and self._rng.random() < self._fail_rate:
            raise BackendError("injected failure")
        prompt_hash = stable_hash64(prompt_text)
        for rule in self._rules:
            if rule.matches(prompt_text, prompt_hash):
                if rule.fail or rule.response is None:
                    raise BackendError("scripted failure rule matched")
                return rule.response
        raise BackendError("no scripted rule matched prompt")


class HttpChatBackend:
    """Reference plugin speaking the common HTTP chat-completions wire format."""

    concurrent_safe = True

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        client: Optional[httpx.AsyncClient] = None,
        backend_id: Optional[str] = None,
    ):
        self._model = model
        self._client = client or httpx.AsyncClient(base_url=base_url)
        self.backend_id = backend_id or f"http:{model}"

    async def complete(self, prompt_text: str, request: CompletionRequest) -> str:
        payload = {
            "model": self._model,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            response = await self._client.post(
                "/v1/chat/completions", json=payload, timeout=request.timeout_s
            )
        except httpx.TimeoutException as exc:
            raise GatewayTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise BackendError(str(exc)) from exc
        if response.status_code != 200:
            raise BackendError(f"backend returned status {response.status_code}")
        try:
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise BackendError(f"malformed backend payload: {exc}") from exc

    async def aclose(self) -> None:
        await self._client.aclose()
