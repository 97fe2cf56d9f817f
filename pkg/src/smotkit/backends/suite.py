"""Assemble a BackendSuite from a JSON suite file or a ``kind:path`` spec."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .base import BackendSuite
from .fixtures import (
    EchoMaskTracker,
    HashingEmbedder,
    ScenarioDetector,
    ScenarioMaskTracker,
    load_scenario,
    load_script,
)
from .remote import remote_backend
from .replay import RecordingBackend, ReplayBackend, TranscriptStore

FIXTURE_KINDS = {"scenario", "echo", "script", "hashing"}
SLOT_ROLES = {"detector": "det", "mask_tracker": "trk", "vlm": "vlm", "llm": "llm", "embedder": "emb"}


class BackendConfigError(ValueError):
    pass


def _resolve(base: Path, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else base / p


def _build_slot(slot: str, spec: Mapping[str, Any], base: Path, scenarios: dict):
    kind = spec.get("kind")
    if kind == "scenario":
        path = _resolve(base, spec["path"])
        scenario = scenarios.setdefault(path, load_scenario(path))
        if slot == "detector":
            return ScenarioDetector(scenario)
        if slot == "mask_tracker":
            return ScenarioMaskTracker(scenario)
    elif kind == "echo" and slot == "mask_tracker":
        return EchoMaskTracker()
    elif kind == "script" and slot in ("vlm", "llm"):
        return load_script(_resolve(base, spec["path"]), slot)
    elif kind == "hashing" and slot == "embedder":
        return HashingEmbedder(spec.get("seed", 0), spec.get("dim", 256))
    elif kind == "remote" and slot in ("vlm", "llm", "embedder"):
        return remote_backend(spec)
    elif kind == "replay" and slot in ("vlm", "llm", "embedder"):
        return ReplayBackend(_resolve(base, spec["path"]))
    raise BackendConfigError(f"backend kind {kind!r} is not valid for slot {slot!r}")


def build_suite(config: Mapping[str, Any], base_dir: str | Path = ".",
                fixture_only: bool = False) -> BackendSuite:
    base = Path(base_dir)
    scenarios: dict = {}
    suite = BackendSuite(provenance=str(config.get("provenance", "custom")))
    for slot in SLOT_ROLES:
        spec = config.get(slot)
        if spec is None:
            continue
        if fixture_only and spec.get("kind") not in FIXTURE_KINDS:
            raise BackendConfigError(f"fixture suite has non-fixture backend {spec.get('kind')!r} for {slot}")
        setattr(suite, slot, _build_slot(slot, spec, base, scenarios))
    if config.get("record"):
        store = TranscriptStore(_resolve(base, config["record"]))
        for slot in ("vlm", "llm", "embedder"):
            if getattr(suite, slot) is not None:
                setattr(suite, slot, RecordingBackend(getattr(suite, slot), store))
    return suite


def load_suite_file(path: str | Path, fixture_only: bool = False) -> BackendSuite:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    return build_suite(config, path.parent, fixture_only)


def parse_backend_spec(spec: str, record: str | Path | None = None) -> BackendSuite:
    """``fixture:<suite.json>``, ``remote:<suite.json>`` or ``replay:<transcript.jsonl>``."""
    prefix, sep, target = spec.partition(":")
    if not sep or not target:
        raise BackendConfigError(f"backend spec {spec!r} must look like fixture:|remote:|replay:<path>")
    if prefix == "fixture":
        suite = load_suite_file(target, fixture_only=True)
    elif prefix == "remote":
        suite = load_suite_file(target)
    elif prefix == "replay":
        if not Path(target).exists():
            raise BackendConfigError(f"transcript {target} does not exist")
        store = TranscriptStore(target)
        replay = ReplayBackend(store)
        suite = BackendSuite(vlm=replay, llm=replay, embedder=replay, provenance=f"replay:{Path(target).name}")
    else:
        raise BackendConfigError(f"unknown backend prefix {prefix!r}")
    if record is not None:
        store = TranscriptStore(record)
        for slot in ("vlm", "llm", "embedder"):
            if getattr(suite, slot) is not None:
                setattr(suite, slot, RecordingBackend(getattr(suite, slot), store))
    return suite
