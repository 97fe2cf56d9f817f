"""Request/response types and the protocols each model role implements."""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

logger = logging.getLogger(__name__)

ROLES = ("det", "trk", "vlm", "llm", "emb")


class BackendError(RuntimeError):
    """A backend could not serve a request (transport, protocol or lookup failure)."""


class UnmatchedRequestError(BackendError):
    """A fixture or replay backend has no response for the request key."""

    def __init__(self, key: str, role: str, detail: str = ""):
        self.key = key
        self.role = role
        super().__init__(f"no scripted response for {role} request key {key}" + (f" ({detail})" if detail else ""))


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True, eq=False)
class MediaPayload:
    """Frames attached to a request plus free-form tags (e.g. target identity)."""

    frames: tuple[np.ndarray, ...]
    tags: Mapping[str, Any] = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.frames)

    def digest(self) -> str:
        h = hashlib.sha256()
        for f in self.frames:
            arr = np.ascontiguousarray(f)
            h.update(repr(arr.shape).encode())
            h.update(arr.tobytes())
        return h.hexdigest()

    def descriptor(self) -> dict:
        return {"count": self.count, "sha256": self.digest(), "tags": dict(self.tags)}


@dataclass(frozen=True, eq=False)
class BackendRequest:
    role: str
    prompt: str
    media: MediaPayload | None = None
    schema: Mapping[str, Any] | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown backend role {self.role!r}")

    def descriptor(self) -> dict:
        return {
            "role": self.role,
            "prompt": self.prompt,
            "media": self.media.descriptor() if self.media is not None else None,
            "schema": self.schema,
        }

    @property
    def key(self) -> str:
        """Stable hash of role, prompt, media descriptor and schema."""
        return sha256_hex(canonical_json(self.descriptor()))


@dataclass(frozen=True)
class BackendResponse:
    text: str | None = None
    vector: tuple[float, ...] | None = None
    latency: float = 0.0
    transcript: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "vector": list(self.vector) if self.vector is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BackendResponse":
        vec = data.get("vector")
        return cls(text=data.get("text"), vector=tuple(vec) if vec is not None else None)


@runtime_checkable
class TextBackend(Protocol):
    """VLM and LLM roles: prompt (+ optional frames) in, text out."""

    def complete(self, request: BackendRequest) -> BackendResponse: ...


@runtime_checkable
class EmbeddingBackend(Protocol):
    def complete(self, request: BackendRequest) -> BackendResponse: ...


@runtime_checkable
class DetectorBackend(Protocol):
    def detect(self, frame: np.ndarray, t: int) -> list: ...


@runtime_checkable
class MaskTrackerBackend(Protocol):
    """Promptable mask tracker.

    ``prompt`` starts a new identity from a box; ``propagate`` returns the
    mask of every identity in ``tracks`` at frame ``t``.
    """

    def prompt(self, frame: np.ndarray, t: int, identity: int, box) -> np.ndarray: ...

    def propagate(self, frame: np.ndarray, t: int, tracks) -> dict[int, np.ndarray]: ...


def embed_texts(backend, texts: Sequence[str]) -> np.ndarray:
    """Embed each text through ``backend.complete``; rows follow input order."""
    rows = []
    for text in texts:
        resp = backend.complete(BackendRequest("emb", text))
        if resp.vector is None:
            raise BackendError(f"embedding backend returned no vector for {text!r}")
        rows.append(np.asarray(resp.vector, dtype=float))
    if not rows:
        return np.zeros((0, 0))
    dims = {r.shape for r in rows}
    if len(dims) != 1:
        raise BackendError(f"embedding backend returned mixed dimensions {sorted(dims)}")
    return np.vstack(rows)


def complete_text(backend, request: BackendRequest) -> str:
    resp = backend.complete(request)
    if resp.text is None:
        raise BackendError(f"{request.role} backend returned no text")
    return resp.text


@dataclass
class BackendSuite:
    """One implementation per model role plus a provenance label for outputs."""

    detector: Any = None
    mask_tracker: Any = None
    vlm: Any = None
    llm: Any = None
    embedder: Any = None
    provenance: str = "unspecified"

    def require(self, *slots: str) -> None:
        missing = [s for s in slots if getattr(self, s) is None]
        if missing:
            raise BackendError(f"backend suite has no implementation for {', '.join(missing)}")
