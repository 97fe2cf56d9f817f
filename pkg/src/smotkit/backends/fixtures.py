"""Deterministic stand-ins for every model role.

Fixtures are pure functions of their configuration and the request, so two
runs over the same inputs produce identical outputs.
"""
from __future__ import annotations

import functools
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from ..geometry import BoundingBox, Detection, iou, mask_tight_box
from .base import BackendRequest, BackendResponse, UnmatchedRequestError

logger = logging.getLogger(__name__)


class HashingEmbedder:
    """Text -> unit vector via seeded feature hashing.

    Features are the exact string, whitespace tokens and character trigrams
    (with boundary markers). No normalization is applied to the text, so
    ``"talk"`` and ``"talk "`` embed differently.
    """

    def __init__(self, seed: int = 0, dim: int = 256):
        if dim < 2:
            raise ValueError("embedding dimension must be at least 2")
        self.seed = int(seed)
        self.dim = int(dim)
        self._key = self.seed.to_bytes(8, "little", signed=True)
        # pure function of the text, so repeated glosses are hashed once
        self._cached = functools.lru_cache(maxsize=1 << 16)(self._compute)

    def _features(self, text: str):
        yield "S:" + text, 1.0
        for tok in text.split():
            yield "T:" + tok, 1.0
        padded = f"^{text}$"
        for i in range(len(padded) - 2):
            yield "C:" + padded[i:i + 3], 0.5

    def vector(self, text: str) -> np.ndarray:
        return self._cached(text).copy()

    def _compute(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for feat, weight in self._features(text):
            digest = hashlib.blake2b(feat.encode("utf-8"), digest_size=8, key=self._key).digest()
            h = int.from_bytes(digest, "little")
            vec[h % self.dim] += weight if (h >> 63) & 1 else -weight
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            # cancelled features; fall back to a single hashed coordinate
            digest = hashlib.blake2b(("Z:" + text).encode("utf-8"), digest_size=8, key=self._key).digest()
            vec[int.from_bytes(digest, "little") % self.dim] = 1.0
            norm = 1.0
        return vec / norm

    def complete(self, request: BackendRequest) -> BackendResponse:
        if request.role != "emb":
            raise ValueError(f"HashingEmbedder cannot serve role {request.role}")
        return BackendResponse(vector=tuple(self.vector(request.prompt).tolist()))


def fixture_embedder(seed: int = 0, dim: int = 256) -> HashingEmbedder:
    return HashingEmbedder(seed, dim)


@dataclass
class ScriptRule:
    response: str
    key: str | None = None
    prompt_contains: str | None = None
    tags: Mapping[str, Any] | None = None

    def matches(self, request: BackendRequest) -> bool:
        if self.key is not None:
            return self.key == request.key
        if self.prompt_contains is not None and self.prompt_contains not in request.prompt:
            return False
        if self.tags is not None:
            have = dict(request.media.tags) if request.media is not None else {}
            if any(have.get(k) != v for k, v in self.tags.items()):
                return False
        return True


class ScriptedTextBackend:
    """Serves canned text for VLM/LLM requests.

    Rules are tried in order; a rule with ``key`` matches one exact request,
    otherwise ``prompt_contains`` and ``tags`` must all match. Unmatched
    requests get ``default`` unless ``strict`` is set.
    """

    def __init__(self, role: str, rules: Sequence[ScriptRule], default: str | None = None,
                 strict: bool = True):
        self.role = role
        self.rules = list(rules)
        self.default = default
        self.strict = strict

    def complete(self, request: BackendRequest) -> BackendResponse:
        if request.role != self.role:
            raise ValueError(f"{self.role} script cannot serve role {request.role}")
        for rule in self.rules:
            if rule.matches(request):
                return BackendResponse(text=rule.response)
        if self.strict or self.default is None:
            head = request.prompt[:60].replace("\n", " ")
            raise UnmatchedRequestError(request.key, request.role, f"prompt starts {head!r}")
        return BackendResponse(text=self.default)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], role: str | None = None) -> "ScriptedTextBackend":
        role = role or data["role"]
        rules = []
        for n, entry in enumerate(data.get("responses", [])):
            if "response" not in entry:
                raise ValueError(f"script entry {n} has no response")
            match = entry.get("match", {})
            rules.append(ScriptRule(entry["response"], entry.get("key"),
                                    match.get("prompt_contains"), match.get("tags")))
        return cls(role, rules, data.get("default"), bool(data.get("strict", True)))


def load_script(path: str | Path, role: str | None = None) -> ScriptedTextBackend:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return ScriptedTextBackend.from_dict(data, role)


def fixture_llm(path: str | Path) -> ScriptedTextBackend:
    return load_script(path, "llm")


def fixture_vlm(path: str | Path) -> ScriptedTextBackend:
    return load_script(path, "vlm")


@dataclass
class Actor:
    """A rectangle moving at constant velocity between two frames."""

    id: int
    box: tuple[float, float, float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    first_frame: int = 0
    last_frame: int | None = None
    color: tuple[int, int, int] = (100, 60, 20)
    class_label: str = "person"
    confidence: float = 0.95

    def box_at(self, t: int, width: int, height: int) -> BoundingBox | None:
        if t < self.first_frame or (self.last_frame is not None and t > self.last_frame):
            return None
        dt = t - self.first_frame
        x, y, w, h = self.box
        raw = BoundingBox(round(x + self.velocity[0] * dt), round(y + self.velocity[1] * dt), w, h)
        return raw.clamp(width, height)


@dataclass
class Scenario:
    """Synthetic video of rectangle actors with scripted motion.

    Also carries optional ground-truth language (summary, captions,
    interactions keyed by actor id) so a scenario doubles as a tiny dataset.
    """

    width: int
    height: int
    num_frames: int
    actors: list[Actor]
    background: tuple[int, int, int] = (40, 40, 40)
    distractors: list[dict] = field(default_factory=list)
    ground_truth: dict = field(default_factory=dict)

    def actor_boxes(self, t: int) -> dict[int, BoundingBox]:
        out = {}
        for a in self.actors:
            box = a.box_at(t, self.width, self.height)
            if box is not None:
                out[a.id] = box
        return out

    def frame(self, t: int) -> np.ndarray:
        img = np.empty((self.height, self.width, 3), dtype=np.uint8)
        img[:] = self.background
        for a in self.actors:
            box = a.box_at(t, self.width, self.height)
            if box is not None:
                img[box.to_mask(self.height, self.width)] = a.color
        return img

    def frames(self) -> list[np.ndarray]:
        return [self.frame(t) for t in range(self.num_frames)]

    def detections(self, t: int) -> list[Detection]:
        dets = []
        for a in self.actors:
            box = a.box_at(t, self.width, self.height)
            if box is not None:
                dets.append(Detection(box, a.confidence, a.class_label))
        for d in self.distractors:
            if d["frame"] == t:
                dets.append(Detection(BoundingBox(*d["box"]), d.get("confidence", 0.5),
                                      d.get("class_label", "person")))
        return dets

    def actor_mask(self, actor_id: int, t: int) -> np.ndarray:
        box = self.actor_boxes(t).get(actor_id)
        if box is None:
            return np.zeros((self.height, self.width), dtype=bool)
        return box.to_mask(self.height, self.width)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Scenario":
        actors = []
        for a in data.get("actors", []):
            actors.append(Actor(
                id=int(a["id"]), box=tuple(a["box"]), velocity=tuple(a.get("velocity", (0, 0))),
                first_frame=int(a.get("first_frame", 0)), last_frame=a.get("last_frame"),
                color=tuple(a.get("color", (100, 60, 20))), class_label=a.get("class_label", "person"),
                confidence=float(a.get("confidence", 0.95)),
            ))
        ids = [a.id for a in actors]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario actor ids must be unique")
        return cls(int(data["width"]), int(data["height"]), int(data["num_frames"]), actors,
                   tuple(data.get("background", (40, 40, 40))), list(data.get("distractors", [])),
                   dict(data.get("ground_truth", {})))


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_dict(json.load(fh))


class ScenarioDetector:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def detect(self, frame: np.ndarray, t: int) -> list[Detection]:
        return self.scenario.detections(t)


class EchoMaskTracker:
    """Prompts become rectangular masks; propagation repeats the last mask."""

    def prompt(self, frame, t, identity, box) -> np.ndarray:
        return box.to_mask(*frame.shape[:2])

    def propagate(self, frame, t, tracks) -> dict[int, np.ndarray]:
        return {tr.identity: tr.masks[-1].copy() for tr in tracks}


class ScenarioMaskTracker(EchoMaskTracker):
    """Idealized tracker: each identity follows the actor it was prompted on.

    The actor is the one whose box best overlaps the identity's birth mask
    (IoU >= 0.5); identities without such an actor keep their last mask.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def _actor_for(self, track) -> int | None:
        birth_box = mask_tight_box(track.masks[0])
        if birth_box is None:
            return None
        best, best_iou = None, 0.5
        for actor_id, box in sorted(self.scenario.actor_boxes(track.birth_frame).items()):
            score = iou(birth_box, box)
            if score >= best_iou:
                best, best_iou = actor_id, score
        return best

    def propagate(self, frame, t, tracks) -> dict[int, np.ndarray]:
        out = {}
        for tr in tracks:
            actor = self._actor_for(tr)
            out[tr.identity] = tr.masks[-1].copy() if actor is None else self.scenario.actor_mask(actor, t)
        return out
