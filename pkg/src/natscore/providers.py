"""HTTP adapter for chat-completions style scoring providers.

Token-probability extraction rule: the score-bearing position is the first
content token whose stripped text is a digit 1-4 (a trailing star in the
same token is tolerated). The distribution kept is that position's
top-logprobs list, filtered to tokens that themselves strip to a digit
1-4, with log probabilities exponentiated.
"""

from __future__ import annotations

import datetime
import math
import re

import requests

from .gateway import (
    ProviderAuthError,
    ProviderTransientError,
    RawResponse,
    ScoreRequest,
    ScoringProvider,
)

_SCORE_TOKEN = re.compile(r"^\s*([1-4])\*?\s*$")


def extract_score_token_distribution(
    logprob_content: list[dict],
) -> tuple[tuple[str, float], ...] | None:
    """Distribution over score tokens at the first score-bearing position."""
    for token_info in logprob_content:
        if not _SCORE_TOKEN.match(token_info.get("token", "")):
            continue
        entries = []
        for candidate in token_info.get("top_logprobs", []):
            match = _SCORE_TOKEN.match(candidate.get("token", ""))
            if match:
                entries.append((match.group(1), math.exp(candidate["logprob"])))
        if entries:
            return tuple(entries)
        # No usable alternatives listed: fall back to the chosen token alone.
        match = _SCORE_TOKEN.match(token_info["token"])
        return ((match.group(1), math.exp(token_info.get("logprob", 0.0))),)
    return None


class OpenAiChatProvider(ScoringProvider):
    """Scores via an OpenAI-compatible /chat/completions endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str,
        timeout: float = 120.0,
        top_logprobs: int = 8,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.top_logprobs = top_logprobs
        self.provider_id = model

    def _payload(self, request: ScoreRequest) -> dict:
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.prompt.system_text},
                {"role": "user", "content": request.user_text},
            ],
        }
        if request.want_token_probabilities:
            payload["logprobs"] = True
            payload["top_logprobs"] = self.top_logprobs
        return payload

    def complete(self, request: ScoreRequest) -> RawResponse:
        try:
            http_response = requests.post(
                self.endpoint,
                json=self._payload(request),
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise ProviderTransientError(str(exc)) from exc
        if http_response.status_code in (401, 403):
            raise ProviderAuthError(f"HTTP {http_response.status_code}")
        if http_response.status_code == 429 or http_response.status_code >= 500:
            raise ProviderTransientError(f"HTTP {http_response.status_code}")
        if http_response.status_code != 200:
            raise ProviderTransientError(
                f"HTTP {http_response.status_code}: {http_response.text[:200]}"
            )
        return self.parse_response(request, http_response.json())

    def parse_response(self, request: ScoreRequest, body: dict) -> RawResponse:
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderTransientError(f"malformed response body: {exc}") from exc
        token_probabilities = None
        if request.want_token_probabilities:
            logprobs = (choice.get("logprobs") or {}).get("content") or []
            token_probabilities = extract_score_token_distribution(logprobs)
            if token_probabilities is None:
                raise ProviderTransientError(
                    "no score-bearing token with probabilities in response"
                )
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        return RawResponse(
            text=text,
            token_probabilities=token_probabilities,
            provider_id=self.provider_id,
            timestamp=timestamp,
            fingerprint=request.fingerprint,
        )
