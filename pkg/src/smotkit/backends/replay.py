"""Transcript recording and offline replay of backend sessions."""
from __future__ import annotations

import json
import threading
from pathlib import Path

from .base import BackendRequest, BackendResponse, UnmatchedRequestError, canonical_json


class TranscriptStore:
    """Line-delimited JSON transcripts keyed by request hash."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, dict] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    self._entries[rec["key"]] = rec
                except (json.JSONDecodeError, KeyError) as exc:
                    raise ValueError(f"{self.path}:{lineno}: malformed transcript record ({exc})") from exc

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str) -> dict | None:
        return self._entries.get(key)

    def record(self, request: BackendRequest, response: BackendResponse) -> None:
        rec = {
            "key": request.key,
            "role": request.role,
            "request": request.descriptor(),
            "response": response.to_dict(),
            "transcript": dict(response.transcript),
        }
        with self._lock:
            if rec["key"] in self._entries:
                return
            self._entries[rec["key"]] = rec
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(canonical_json(rec) + "\n")


class RecordingBackend:
    """Passes requests to ``inner`` and persists every exchange."""

    def __init__(self, inner, store: TranscriptStore):
        self.inner = inner
        self.store = store

    def complete(self, request: BackendRequest) -> BackendResponse:
        response = self.inner.complete(request)
        self.store.record(request, response)
        return response


class ReplayBackend:
    """Re-serves a recorded session; unknown requests are errors."""

    def __init__(self, store: TranscriptStore | str | Path):
        self.store = store if isinstance(store, TranscriptStore) else TranscriptStore(store)

    def complete(self, request: BackendRequest) -> BackendResponse:
        rec = self.store.get(request.key)
        if rec is None:
            raise UnmatchedRequestError(request.key, request.role, "not in transcript")
        return BackendResponse.from_dict(rec["response"])
