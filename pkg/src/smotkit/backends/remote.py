"""HTTP clients for chat-completion and embedding services."""
from __future__ import annotations

import base64
import io
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Any, Callable, Mapping

import httpx
import jsonschema
import numpy as np
from PIL import Image

from .base import BackendError, BackendRequest, BackendResponse

logger = logging.getLogger(__name__)

TRANSIENT_STATUS = {408, 425, 429, 500, 502, 503, 504}


class TransportError(BackendError):
    """The service could not be reached after all retries."""

    def __init__(self, message: str, attempts: list[dict]):
        self.attempts = attempts
        super().__init__(f"{message} after {len(attempts)} attempts: {attempts}")


@dataclass
class EndpointConfig:
    base_url: str
    model: str
    api_key_env: str | None = None
    structured_output: bool | str = "auto"
    dimension: int | None = None
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.5
    backoff_cap: float = 8.0
    max_concurrency: int = 4

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EndpointConfig":
        fields = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**fields)

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env) if self.api_key_env else None


def encode_frame(frame: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(frame, dtype=np.uint8)).save(buf, format="PNG")
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")


class RemoteBackend:
    """OpenAI-style ``/chat/completions`` and ``/embeddings`` client.

    Transient failures (timeouts, connection errors, 429 and 5xx) are retried
    with capped exponential backoff. With ``structured_output="auto"`` a schema
    is sent as a JSON-schema response format; if the service rejects it, the
    call is repeated unconstrained and the answer is validated locally.
    """

    def __init__(self, config: EndpointConfig, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.sleep = sleep
        headers = {"Content-Type": "application/json"}
        key = config.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(base_url=config.base_url.rstrip("/"), headers=headers,
                                    timeout=config.timeout, transport=transport)
        self._gate = threading.BoundedSemaphore(max(1, config.max_concurrency))
        self._structured = config.structured_output

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, payload: dict) -> tuple[httpx.Response, list[dict]]:
        attempts: list[dict] = []
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self.sleep(min(self.config.backoff_cap, self.config.backoff_base * 2 ** (attempt - 1)))
            try:
                with self._gate:
                    resp = self._client.post(path, json=payload)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                attempts.append({"attempt": attempt + 1, "error": f"{type(exc).__name__}: {exc}"})
                continue
            if resp.status_code in TRANSIENT_STATUS:
                attempts.append({"attempt": attempt + 1, "status": resp.status_code})
                continue
            attempts.append({"attempt": attempt + 1, "status": resp.status_code})
            return resp, attempts
        raise TransportError(f"POST {path} failed", attempts)

    def complete(self, request: BackendRequest) -> BackendResponse:
        start = time.perf_counter()
        if request.role == "emb":
            resp, transcript = self._embed(request)
        elif request.role in ("vlm", "llm"):
            resp, transcript = self._chat(request)
        else:
            raise BackendError(f"remote backend does not serve role {request.role}")
        latency = time.perf_counter() - start
        return BackendResponse(resp.get("text"), resp.get("vector"), latency, transcript)

    def _embed(self, request: BackendRequest):
        payload = {"model": self.config.model, "input": request.prompt}
        resp, attempts = self._post("/embeddings", payload)
        body = self._json(resp, attempts)
        try:
            vector = tuple(float(v) for v in body["data"][0]["embedding"])
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed embedding response: {body!r}") from exc
        if self.config.dimension is not None and len(vector) != self.config.dimension:
            raise BackendError(f"embedding has dimension {len(vector)}, endpoint declares {self.config.dimension}")
        return {"vector": vector}, {"payload": payload, "response": body, "attempts": attempts}

    def _messages(self, request: BackendRequest) -> list[dict]:
        content: list[dict] = [{"type": "text", "text": request.prompt}]
        if request.media is not None:
            for frame in request.media.frames:
                content.append({"type": "image_url", "image_url": {"url": encode_frame(frame)}})
        return [{"role": "user", "content": content}]

    def _chat(self, request: BackendRequest):
        payload: dict[str, Any] = {"model": self.config.model, "messages": self._messages(request),
                                   "temperature": 0}
        constrained = request.schema is not None and self._structured in (True, "auto")
        if constrained:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {"name": "output", "schema": request.schema},
            }
        resp, attempts = self._post("/chat/completions", payload)
        if constrained and resp.status_code in (400, 422) and self._structured == "auto":
            logger.warning("service rejected structured output (%d); retrying unconstrained", resp.status_code)
            self._structured = False
            constrained = False
            payload.pop("response_format")
            resp, more = self._post("/chat/completions", payload)
            attempts += more
        body = self._json(resp, attempts)
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat response: {body!r}") from exc
        transcript = {
            "payload": _redact_images(payload), "response": body, "attempts": attempts,
            "constrained": constrained,
        }
        if request.schema is not None and not constrained:
            transcript["local_validation"] = _validate(text, request.schema)
        return {"text": text}, transcript

    @staticmethod
    def _json(resp: httpx.Response, attempts: list[dict]) -> dict:
        if resp.status_code >= 400:
            raise BackendError(f"service answered HTTP {resp.status_code}: {resp.text[:200]!r}; attempts {attempts}")
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendError(f"service returned non-JSON body: {resp.text[:200]!r}") from exc


def _validate(text: str, schema: Mapping) -> str:
    try:
        jsonschema.validate(json.loads(text), schema)
    except (ValueError, jsonschema.ValidationError) as exc:
        msg = getattr(exc, "message", str(exc))
        logger.warning("unconstrained response fails the output schema: %s", msg)
        return f"failed: {msg}"
    return "ok"


def _redact_images(payload: dict) -> dict:
    out = json.loads(json.dumps(payload))
    for msg in out.get("messages", []):
        for part in msg.get("content", []):
            if part.get("type") == "image_url":
                url = part["image_url"]["url"]
                part["image_url"]["url"] = f"<{len(url)} chars>"
    return out


def remote_backend(config: Mapping[str, Any] | EndpointConfig, **kwargs) -> RemoteBackend:
    if not isinstance(config, EndpointConfig):
        config = EndpointConfig.from_dict(config)
    return RemoteBackend(config, **kwargs)
