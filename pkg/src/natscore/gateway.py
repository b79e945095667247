"""Batch execution of scoring requests against a pluggable provider.

Requests are content-addressed: the fingerprint hashes (system text, user
text, variant, run index). Completed responses land in an append-only
on-disk cache keyed by fingerprint, so interrupted batches resume without
repeating finished work. Each run is an independent stateless request;
there is no conversational carry-over between repetitions.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Article, Panel
from .prompts import PromptSpec, Regime, Variant, build_user_prompt


class ProviderAuthError(RuntimeError):
    """Authentication/authorization failure: the batch aborts immediately."""


class ProviderTransientError(RuntimeError):
    """Retryable failure (rate limit, timeout, server error)."""


def request_fingerprint(
    system_text: str, user_text: str, variant: str, run_index: int
) -> str:
    payload = json.dumps(
        [system_text, user_text, variant, run_index], ensure_ascii=False
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ScoreRequest:
    article_id: str
    prompt: PromptSpec
    user_text: str
    run_index: int

    @property
    def want_token_probabilities(self) -> bool:
        return self.prompt.variant is Variant.PROBABILITY

    @property
    def fingerprint(self) -> str:
        return request_fingerprint(
            self.prompt.system_text,
            self.user_text,
            self.prompt.variant.value,
            self.run_index,
        )


@dataclass(frozen=True)
class RawResponse:
    text: str
    token_probabilities: tuple[tuple[str, float], ...] | None
    provider_id: str
    timestamp: str
    fingerprint: str


@dataclass(frozen=True)
class FailureRecord:
    article_id: str
    fingerprint: str
    regime: str
    panel: str
    variant: str
    run_index: int
    attempts: int
    error: str


@dataclass(frozen=True)
class RetryPolicy:
    max_in_flight: int = 4
    max_retries: int = 2
    backoff_seconds: float = 0.1
    requests_per_second: float | None = None


@dataclass
class BatchTelemetry:
    requests: int = 0
    provider_calls: int = 0
    cache_hits: int = 0
    retries: int = 0
    failures: int = 0


@dataclass
class BatchResult:
    outcomes: list[tuple[ScoreRequest, RawResponse | FailureRecord]]
    telemetry: BatchTelemetry


class ScoringProvider(ABC):
    """Stateless completion capability: request in, response out."""

    provider_id: str = "provider"

    @abstractmethod
    def complete(self, request: ScoreRequest) -> RawResponse:
        raise NotImplementedError


class ResponseCache:
    """Append-only directory cache, one JSON document per fingerprint.

    Writes are atomic (temp file + rename) and serialized by a lock;
    existing entries are never overwritten.
    """

    def __init__(self, directory: Path | str):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, fingerprint: str) -> Path:
        return self.directory / f"{fingerprint}.json"

    def __contains__(self, fingerprint: str) -> bool:
        return self._path(fingerprint).is_file()

    def __len__(self) -> int:
        return sum(1 for _ in self.directory.glob("*.json"))

    def get(self, fingerprint: str) -> RawResponse | None:
        path = self._path(fingerprint)
        if not path.is_file():
            return None
        doc = json.loads(path.read_text(encoding="utf-8"))
        probs = doc.get("token_probabilities")
        return RawResponse(
            text=doc["text"],
            token_probabilities=(
                tuple((t, float(p)) for t, p in probs) if probs is not None else None
            ),
            provider_id=doc.get("provider_id", ""),
            timestamp=doc.get("timestamp", ""),
            fingerprint=doc["fingerprint"],
        )

    def put(self, request: ScoreRequest, response: RawResponse) -> None:
        path = self._path(response.fingerprint)
        doc = {
            "fingerprint": response.fingerprint,
            "article_id": request.article_id,
            "regime": request.prompt.regime.value,
            "panel": request.prompt.panel.value,
            "variant": request.prompt.variant.value,
            "run_index": request.run_index,
            "template_version": request.prompt.template_version,
            "text": response.text,
            "token_probabilities": (
                [[t, p] for t, p in response.token_probabilities]
                if response.token_probabilities is not None
                else None
            ),
            "provider_id": response.provider_id,
            "timestamp": response.timestamp,
        }
        with self._lock:
            if path.is_file():
                return
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(doc, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, path)


class _TokenBucket:
    """Shared request-rate limiter; refills continuously."""

    def __init__(self, rate: float):
        self.rate = rate
        self.capacity = max(1.0, rate)
        self.tokens = self.capacity
        self.updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self.tokens = min(
                    self.capacity, self.tokens + (now - self.updated) * self.rate
                )
                self.updated = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            time.sleep(wait)


def build_requests(
    articles: Sequence[Article],
    prompt_specs: Mapping[tuple[Regime, Panel, Variant], PromptSpec],
    panel_by_id: Mapping[str, Panel],
    repetitions: int,
    regimes: Iterable[Regime] | None = None,
    variants: Iterable[Variant] | None = None,
) -> list[ScoreRequest]:
    """All (article x regime x variant x run) requests, in a stable order.

    With R repetitions and no filters this is 3 x 2 x R requests per
    article.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    chosen_regimes = tuple(regimes) if regimes else tuple(Regime)
    chosen_variants = tuple(variants) if variants else tuple(Variant)
    requests: list[ScoreRequest] = []
    for article in articles:
        user_text = build_user_prompt(article)
        panel = panel_by_id[article.id]
        for regime in chosen_regimes:
            for variant in chosen_variants:
                spec = prompt_specs[(regime, panel, variant)]
                for run_index in range(1, repetitions + 1):
                    requests.append(
                        ScoreRequest(
                            article_id=article.id,
                            prompt=spec,
                            user_text=user_text,
                            run_index=run_index,
                        )
                    )
    return requests


def _failure(request: ScoreRequest, attempts: int, error: str) -> FailureRecord:
    return FailureRecord(
        article_id=request.article_id,
        fingerprint=request.fingerprint,
        regime=request.prompt.regime.value,
        panel=request.prompt.panel.value,
        variant=request.prompt.variant.value,
        run_index=request.run_index,
        attempts=attempts,
        error=error,
    )


def execute_batch(
    requests: Sequence[ScoreRequest],
    provider: ScoringProvider,
    policy: RetryPolicy = RetryPolicy(),
    cache: ResponseCache | None = None,
) -> BatchResult:
    """Run every request once, resolving from the cache where possible.

    Each request yields exactly one response or, after exhausted retries,
    one FailureRecord. Successful responses are appended to the cache so a
    rerun skips completed fingerprints. An authentication failure aborts
    the whole batch.
    """
    if not requests:
        raise ValueError("execute_batch requires a non-empty request list")
    telemetry = BatchTelemetry(requests=len(requests))
    bucket = (
        _TokenBucket(policy.requests_per_second)
        if policy.requests_per_second
        else None
    )

    by_fingerprint: dict[str, RawResponse | FailureRecord] = {}
    pending: list[ScoreRequest] = []
    scheduled: set[str] = set()
    for request in requests:
        fp = request.fingerprint
        if fp in by_fingerprint or fp in scheduled:
            telemetry.cache_hits += 1
            continue
        cached = cache.get(fp) if cache is not None else None
        if cached is not None:
            by_fingerprint[fp] = cached
            telemetry.cache_hits += 1
        else:
            pending.append(request)
            scheduled.add(fp)

    def run_one(request: ScoreRequest) -> tuple[str, RawResponse | FailureRecord, int, int]:
        calls = 0
        retries = 0
        last_error = ""
        for attempt in range(policy.max_retries + 1):
            if bucket is not None:
                bucket.acquire()
            calls += 1
            try:
                response = provider.complete(request)
            except ProviderAuthError:
                raise
            except Exception as exc:  # transient: retry with backoff
                last_error = f"{type(exc).__name__}: {exc}"
                if attempt < policy.max_retries:
                    retries += 1
                    time.sleep(policy.backoff_seconds * (2**attempt))
                continue
            if cache is not None:
                cache.put(request, response)
            return request.fingerprint, response, calls, retries
        return request.fingerprint, _failure(request, calls, last_error), calls, retries

    if pending:
        with ThreadPoolExecutor(max_workers=policy.max_in_flight) as pool:
            futures = [pool.submit(run_one, request) for request in pending]
            try:
                for future in as_completed(futures):
                    fp, outcome, calls, retries = future.result()
                    by_fingerprint[fp] = outcome
                    telemetry.provider_calls += calls
                    telemetry.retries += retries
                    if isinstance(outcome, FailureRecord):
                        telemetry.failures += 1
            except ProviderAuthError as exc:
                for future in futures:
                    future.cancel()
                raise ProviderAuthError(
                    f"provider rejected the credentials: {exc}; "
                    "check the configured credentials environment variable"
                ) from exc

    outcomes = [(request, by_fingerprint[request.fingerprint]) for request in requests]
    return BatchResult(outcomes=outcomes, telemetry=telemetry)
