"""Minimal client for a JSON-over-HTTP chat-completion endpoint."""

from __future__ import annotations

import logging
import os
import random
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import httpx

from .prompts import PromptBundle

log = logging.getLogger(__name__)

RETRY_STATUS = {429, 500, 502, 503, 504}


class ChatError(Exception):
    pass


class AuthError(ChatError):
    pass


class RateLimited(ChatError):
    pass


class Timeout(ChatError):
    pass


class MalformedResponse(ChatError):
    pass


class ServiceError(ChatError):
    """Non-retryable HTTP error, or retryable server errors that never cleared."""


@dataclass
class EndpointConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-5-mini-2025-08-07"
    api_key_env: str = "CHAT_API_KEY"
    timeout: float = 120.0
    max_in_flight: int = 4
    max_attempts: int = 5
    backoff_base: float = 1.0
    jitter: float = 1.0
    params: dict = field(default_factory=dict)

    def api_key(self) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise AuthError(f"credential variable {self.api_key_env} is not set")
        return key

    @classmethod
    def from_dict(cls, d: dict) -> EndpointConfig:
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


class ChatClient:
    def __init__(
        self,
        config: EndpointConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        key = config.api_key()
        self._sleep = sleep
        self._http = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {key}"},
            timeout=config.timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> ChatClient:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _delay(self, attempt: int, response: httpx.Response | None) -> float:
        if response is not None:
            retry_after = response.headers.get("Retry-After")
            try:
                return max(0.0, float(retry_after))
            except (TypeError, ValueError):
                pass
        return self.config.backoff_base * 2**attempt + random.uniform(0, self.config.jitter)

    def complete(self, bundle: PromptBundle, record_id: str = "") -> str:
        payload = {"model": self.config.model, "messages": bundle.messages(), **self.config.params}
        last: ChatError | None = None
        for attempt in range(self.config.max_attempts):
            response = None
            log.info("request %s attempt %d", record_id, attempt + 1, extra={"record_id": record_id, "request": payload})
            try:
                response = self._http.post("/chat/completions", json=payload)
            except httpx.TimeoutException as exc:
                last = Timeout(f"{record_id}: {exc}")
            except httpx.TransportError as exc:
                last = ServiceError(f"{record_id}: {exc}")
            else:
                if response.status_code in (401, 403):
                    raise AuthError(f"{record_id}: HTTP {response.status_code}")
                if response.status_code == 429:
                    last = RateLimited(f"{record_id}: HTTP 429 after {attempt + 1} attempts")
                elif response.status_code in RETRY_STATUS:
                    last = ServiceError(f"{record_id}: HTTP {response.status_code}")
                elif response.status_code >= 400:
                    raise ServiceError(f"{record_id}: HTTP {response.status_code}: {response.text[:200]}")
                else:
                    text = _assistant_text(response, record_id)
                    log.info("response %s", record_id, extra={"record_id": record_id, "response": text})
                    return text
            log.warning("%s; retrying", last)
            if attempt + 1 < self.config.max_attempts:
                self._sleep(self._delay(attempt, response))
        raise last


def _assistant_text(response: httpx.Response, record_id: str) -> str:
    try:
        content = response.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        raise MalformedResponse(f"{record_id}: unexpected response body {response.text[:200]!r}") from None
    if not isinstance(content, str):
        raise MalformedResponse(f"{record_id}: assistant content is not text")
    return content


def chat_complete(config: EndpointConfig, bundle: PromptBundle, record_id: str = "", **client_kwargs) -> str:
    """One-shot call; the credential is checked before any connection is made."""
    with ChatClient(config, **client_kwargs) as client:
        return client.complete(bundle, record_id)


def complete_many(
    client: ChatClient, requests: Sequence[tuple[str, PromptBundle]], max_in_flight: int | None = None
) -> dict[str, str | ChatError]:
    """Run requests with bounded concurrency; results keyed and ordered by request id."""
    limit = max_in_flight or client.config.max_in_flight

    def run(item):
        request_id, bundle = item
        try:
            return request_id, client.complete(bundle, request_id)
        except ChatError as exc:
            return request_id, exc

    with ThreadPoolExecutor(max_workers=max(1, limit)) as pool:
        results = dict(pool.map(run, requests))
    return {k: results[k] for k in sorted(results)}
