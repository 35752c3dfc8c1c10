"""HTTP client for chat-completion and embedding endpoints.

The wire format is the common chat-completions / embeddings REST shape.
Tests and offline runs swap the network for an ``httpx`` transport: a
``httpx.MockTransport`` double, or :class:`ReplayTransport` over a recorded
fixture file.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx
import numpy as np

from ..errors import ConfigError, CredentialError, GatewayError, IntegrityError, TransportError
from .parsing import StructuredReply, parse_reply

log = logging.getLogger(__name__)

RETRYABLE_STATUS = {408, 409, 429, 500, 502, 503, 504}
REDACTED = "<redacted>"


@dataclass(frozen=True)
class ModelConfig:
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-4"
    temperature: float = 1.0
    max_in_flight: int = 4
    timeout: float = 60.0
    max_attempts: int = 3
    backoff_base: float = 0.5
    api_key_env: str = "OPENAI_API_KEY"
    embedding_model: str = "text-embedding-ada-002"

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError("temperature must be non-negative")
        if self.max_attempts < 1 or self.max_in_flight < 1:
            raise ConfigError("max_attempts and max_in_flight must be at least 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def _request_key(method: str, url: str, body: bytes) -> str:
    path = httpx.URL(url).path
    return hashlib.sha256(f"{method} {path} ".encode() + body).hexdigest()[:20]


class RecordingTransport(httpx.BaseTransport):
    """Forwards to ``inner`` and keeps a redacted transcript of every exchange."""

    def __init__(self, inner: httpx.BaseTransport, secrets: Sequence[str] = ()):
        self.inner = inner
        self.secrets = [s for s in secrets if s]
        self.entries = []
        self._lock = threading.Lock()

    def _scrub(self, text: str) -> str:
        for s in self.secrets:
            text = text.replace(s, REDACTED)
        return text

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        body = request.read()
        response = self.inner.handle_request(request)
        content = response.read()
        entry = {
            "key": _request_key(request.method, str(request.url), body),
            "method": request.method,
            "path": request.url.path,
            "request": self._scrub(body.decode("utf-8", "replace")),
            "status": response.status_code,
            "response": self._scrub(content.decode("utf-8", "replace")),
        }
        with self._lock:
            self.entries.append(entry)
        return httpx.Response(response.status_code, content=content, headers={"content-type": "application/json"})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps({"kind": "onuw-transcript/1", "entries": self.entries}, indent=1), encoding="utf-8")


class ReplayTransport(httpx.BaseTransport):
    """Serves recorded responses by request content; unknown requests fail.

    Repeated identical requests are answered in recorded order, cycling on
    the last one.
    """

    def __init__(self, entries):
        self.by_key = {}
        for e in entries:
            self.by_key.setdefault(e["key"], []).append(e)
        self.cursor = {}
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "ReplayTransport":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["entries"])

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        key = _request_key(request.method, str(request.url), request.read())
        with self._lock:
            hits = self.by_key.get(key)
            if not hits:
                # Not an httpx error, so the gateway does not retry it.
                raise TransportError(f"replay-only mode: no recorded response for request {key}")
            i = self.cursor.get(key, 0)
            self.cursor[key] = i + 1
            entry = hits[min(i, len(hits) - 1)]
        return httpx.Response(entry["status"], content=entry["response"].encode(), headers={"content-type": "application/json"})


class Gateway:
    """Thread-safe client with retries and an in-flight limit."""

    def __init__(
        self,
        cfg: ModelConfig,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
        replay_only: bool = False,
    ):
        if replay_only and not isinstance(transport, ReplayTransport):
            raise ConfigError("replay-only mode needs a ReplayTransport")
        self.cfg = cfg
        self.sleep = sleep
        self._slots = threading.BoundedSemaphore(cfg.max_in_flight)
        self._lock = threading.Lock()
        self.in_flight = 0
        self.peak_in_flight = 0
        self.embedding_dim: Optional[int] = None
        self.total_tokens = 0
        self._client = httpx.Client(base_url=cfg.endpoint.rstrip("/") + "/", transport=transport, timeout=cfg.timeout)

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _headers(self) -> dict:
        key = os.environ.get(self.cfg.api_key_env)
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _post(self, path: str, payload: dict) -> tuple:
        """POST with retries.  Returns ``(json body, retries used)``."""
        body = json.dumps(payload, sort_keys=True).encode()
        last = None
        for attempt in range(self.cfg.max_attempts):
            if attempt:
                self.sleep(self.cfg.backoff_base * 2 ** (attempt - 1))
            with self._slots:
                with self._lock:
                    self.in_flight += 1
                    self.peak_in_flight = max(self.peak_in_flight, self.in_flight)
                try:
                    resp = self._client.post(path, content=body, headers={**self._headers(), "content-type": "application/json"})
                except httpx.TransportError as exc:
                    last = f"{type(exc).__name__}: {exc}"
                    log.warning("attempt %d to %s failed: %s", attempt + 1, path, last)
                    continue
                finally:
                    with self._lock:
                        self.in_flight -= 1
            if resp.status_code in (401, 403):
                raise CredentialError(f"{path} rejected the credentials (HTTP {resp.status_code})")
            if resp.status_code in RETRYABLE_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("attempt %d to %s failed: %s", attempt + 1, path, last)
                continue
            if resp.status_code >= 400:
                raise GatewayError(f"{path} returned HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json(), attempt
            except ValueError as exc:
                raise GatewayError(f"{path} returned a non-JSON body") from exc
        raise TransportError(f"{path} failed after {self.cfg.max_attempts} attempts ({last})")

    def chat(self, messages, fmt: str = "speech", temperature: Optional[float] = None) -> StructuredReply:
        """Send ``[{"role", "content"}, ...]`` and parse the reply in ``fmt``."""
        payload = {
            "model": self.cfg.model,
            "messages": [dict(m) for m in messages],
            "temperature": self.cfg.temperature if temperature is None else temperature,
        }
        data, retries = self._post("chat/completions", payload)
        try:
            text = data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise GatewayError("chat response has no message content") from exc
        usage = data.get("usage") or {}
        with self._lock:
            self.total_tokens += int(usage.get("total_tokens", 0))
        reply = parse_reply(text, fmt)
        reply.retries = retries
        reply.usage = usage
        return reply

    def embed(self, texts: Sequence[str]) -> list:
        texts = list(texts)
        if not texts:
            return []
        data, _ = self._post("embeddings", {"model": self.cfg.embedding_model, "input": texts})
        try:
            rows = sorted(data["data"], key=lambda d: d.get("index", 0))
            vecs = [np.asarray(r["embedding"], dtype=float) for r in rows]
        except (KeyError, TypeError) as exc:
            raise GatewayError("embedding response is malformed") from exc
        if len(vecs) != len(texts):
            raise IntegrityError(f"asked for {len(texts)} embeddings, got {len(vecs)}")
        with self._lock:
            for i, v in enumerate(vecs):
                if self.embedding_dim is None:
                    self.embedding_dim = v.shape[0]
                elif v.shape[0] != self.embedding_dim:
                    raise IntegrityError(f"embedding {i} has dimension {v.shape[0]}, expected {self.embedding_dim}", i)
        return vecs


def system_user(system: str, user: str) -> list:
    return [{"role": "system", "content": system}, {"role": "user", "content": user}]
