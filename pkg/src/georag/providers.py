"""Provider gateway: turn a GeoPrompt into a parsed GeoPrediction.

Three provider kinds:

  remote-chat       HTTP chat-completions endpoint serving a multimodal
                    model; the only provider that leaves the process.
  mock-midpoint     geographic midpoint of the positive anchors; fully
                    deterministic, doubles as a retrieval-only baseline.
  nearest-neighbor  location of the top-1 positive anchor, reproducing
                    the classic retrieval baseline.

Remote replies are parsed with parse_coordinate; unparseable replies are
retried with a clarification line, and when retries run out the gateway
degrades to the midpoint of the positive anchors instead of failing the
query. Transport failures are different: they surface as TransportError.
"""

from __future__ import annotations

import base64
import os
import random
import threading
import time
from dataclasses import dataclass, field

import requests

from .geodesy import GeodesyError, GeoCoordinate, geographic_midpoint
from .prompting import CLARIFICATION, CoordinateParseError, GeoPrompt, parse_coordinate

PROVIDER_KINDS = ("remote-chat", "mock-midpoint", "nearest-neighbor")


class ProviderError(Exception):
    """Base class for gateway failures."""


class ProviderConfigError(ProviderError):
    """Bad provider configuration or unresolvable credentials."""


class TransportError(ProviderError):
    """The remote endpoint could not be reached or kept failing."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class PredictionError(ProviderError):
    """No prediction possible, not even a fallback."""


@dataclass
class ProviderConfig:
    """Where and how to reach a provider.

    credential_env names an environment variable holding the API key; the
    key itself never appears in configuration, logs or errors.
    request_params are passed through opaquely into the request body
    (temperature, max_tokens, ...).
    """

    kind: str
    endpoint: str = ""
    model: str = ""
    credential_env: str = ""
    timeout_s: float = 60.0
    max_retries: int = 2
    max_concurrency: int = 4
    backoff_base_s: float = 1.0
    request_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise ProviderConfigError(
                f"unknown provider kind {self.kind!r}; expected one of {PROVIDER_KINDS}"
            )
        if self.timeout_s <= 0:
            raise ProviderConfigError("timeout must be positive")
        if self.max_retries < 0:
            raise ProviderConfigError("max retries must be >= 0")
        if self.max_concurrency < 1:
            raise ProviderConfigError("max concurrency must be >= 1")


@dataclass(frozen=True)
class GeoPrediction:
    location: GeoCoordinate
    raw_response: str
    provider: str
    fallback_used: bool
    latency_ms: float


class Gateway:
    """A shareable provider client enforcing the in-flight request cap."""

    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg
        self._session = requests.Session()
        self._slots = threading.BoundedSemaphore(cfg.max_concurrency)

    @property
    def provider_id(self) -> str:
        if self.cfg.kind == "remote-chat" and self.cfg.model:
            return f"remote-chat:{self.cfg.model}"
        return self.cfg.kind

    def geolocate(self, prompt: GeoPrompt) -> GeoPrediction:
        """Run one prompt through the configured provider.

        Every exit path either raises or returns a validated coordinate.
        """
        start = time.perf_counter()
        if self.cfg.kind == "mock-midpoint":
            loc = self._anchor_midpoint(prompt)
            raw = f"midpoint of {len(prompt.pos_anchors)} positive anchors"
            return self._done(loc, raw, False, start)
        if self.cfg.kind == "nearest-neighbor":
            if not prompt.pos_anchors:
                raise PredictionError("nearest-neighbor provider needs at least one positive anchor")
            return self._done(prompt.pos_anchors[0], "top-1 positive anchor", False, start)
        return self._geolocate_remote(prompt, start)

    def _done(self, loc, raw, fallback, start) -> GeoPrediction:
        return GeoPrediction(
            location=loc,
            raw_response=raw,
            provider=self.provider_id,
            fallback_used=fallback,
            latency_ms=(time.perf_counter() - start) * 1000.0,
        )

    def _anchor_midpoint(self, prompt: GeoPrompt) -> GeoCoordinate:
        if not prompt.pos_anchors:
            raise PredictionError("no positive anchors to take a midpoint of")
        return geographic_midpoint(prompt.pos_anchors)

    def _geolocate_remote(self, prompt: GeoPrompt, start: float) -> GeoPrediction:
        last_reply = ""
        attempts = 1 + self.cfg.max_retries
        for attempt in range(attempts):
            text = prompt.text if attempt == 0 else f"{prompt.text}\n\n{CLARIFICATION}"
            reply = self.chat_call(text, prompt.image_ref)
            try:
                return self._done(parse_coordinate(reply), reply, False, start)
            except (CoordinateParseError, GeodesyError):
                last_reply = reply
        loc = self._anchor_midpoint(prompt)  # PredictionError if no anchors
        raw = (
            f"[fallback: positive-anchor midpoint] no parseable coordinates in "
            f"{attempts} replies; last reply: {last_reply}"
        )
        return self._done(loc, raw, True, start)

    def chat_call(self, text: str, image_ref=None) -> str:
        """POST one chat-completions request and return the reply text.

        Transport failures (connection errors, timeouts, 5xx, 429) are
        retried with exponential backoff and +-20% jitter; anything still
        failing after the retry budget raises TransportError.
        """
        if not self.cfg.endpoint:
            raise ProviderConfigError("remote-chat provider needs an endpoint URL")
        headers = {}
        if self.cfg.credential_env:
            credential = os.environ.get(self.cfg.credential_env)
            if not credential:
                raise ProviderConfigError(
                    f"credential environment variable {self.cfg.credential_env} is not set"
                )
            headers["Authorization"] = f"Bearer {credential}"

        content: list[dict] = [{"type": "text", "text": text}]
        if image_ref is not None:
            b64 = base64.b64encode(image_ref.data).decode("ascii")
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:{image_ref.media_type};base64,{b64}"},
                }
            )
        body = {
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": 0,
        }
        body.update(self.cfg.request_params)

        failure = "no attempt made"
        status: int | None = None
        with self._slots:
            for attempt in range(1 + self.cfg.max_retries):
                if attempt:
                    delay = self.cfg.backoff_base_s * (2 ** (attempt - 1))
                    time.sleep(delay * random.uniform(0.8, 1.2))
                try:
                    resp = self._session.post(
                        self.cfg.endpoint, json=body, headers=headers, timeout=self.cfg.timeout_s
                    )
                except requests.RequestException as exc:
                    failure, status = f"transport failure: {exc.__class__.__name__}: {exc}", None
                    continue
                if resp.status_code == 429 or resp.status_code >= 500:
                    failure, status = f"HTTP {resp.status_code}: {resp.text[:200]}", resp.status_code
                    continue
                if not 200 <= resp.status_code < 300:
                    raise TransportError(
                        f"HTTP {resp.status_code}: {resp.text[:200]}", status=resp.status_code
                    )
                return self._extract_reply(resp)
        raise TransportError(
            f"{failure} (after {1 + self.cfg.max_retries} attempts)", status=status
        )

    @staticmethod
    def _extract_reply(resp: requests.Response) -> str:
        try:
            payload = resp.json()
            message = payload["choices"][0]["message"]
            reply = message["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise TransportError(f"malformed chat-completions response: {exc}") from exc
        if isinstance(reply, list):  # some servers return content parts
            reply = "".join(part.get("text", "") for part in reply if isinstance(part, dict))
        if not isinstance(reply, str):
            raise TransportError(f"unexpected reply content type {type(reply).__name__}")
        return reply


def geolocate(prompt: GeoPrompt, cfg: ProviderConfig) -> GeoPrediction:
    """One-shot convenience wrapper around Gateway.geolocate."""
    return Gateway(cfg).geolocate(prompt)
