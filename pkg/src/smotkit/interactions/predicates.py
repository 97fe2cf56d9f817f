"""Directed predicate extraction from instance captions."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Mapping

import jsonschema

from ..backends.base import BackendRequest, complete_text
from ..prompts import load_template

logger = logging.getLogger(__name__)

ID_PATTERN = r"^ID_[0-9]+$"

PREDICATE_SCHEMA = {
    "type": "object",
    "patternProperties": {
        ID_PATTERN: {
            "type": "object",
            "patternProperties": {
                ID_PATTERN: {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


class PredicateParseError(ValueError):
    """The predicate response is not JSON or violates the output schema."""

    def __init__(self, message: str, raw: str):
        self.raw = raw
        super().__init__(f"{message}; raw payload: {raw!r}")


@dataclass(frozen=True)
class PredicateSet:
    by_pair: Mapping[tuple[int, int], tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), verbs in self.by_pair.items():
            if i == j:
                raise ValueError(f"self pair ({i}, {j}) in PredicateSet")

    def __len__(self) -> int:
        return sum(len(v) for v in self.by_pair.values())

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self.by_pair)


def format_id(identity: int) -> str:
    return f"ID_{identity}"


def parse_id(key: str) -> int:
    return int(key.split("_", 1)[1])


def captions_json(captions: Mapping[int, str]) -> str:
    payload = {format_id(i): captions[i] for i in sorted(captions)}
    return json.dumps(payload, indent=2, ensure_ascii=False)


def predicate_request(captions: Mapping[int, str]) -> BackendRequest:
    prompt = load_template("predicate_extraction").render({"{captions_json}": captions_json(captions)})
    return BackendRequest("llm", prompt, schema=PREDICATE_SCHEMA)


def loads_json_object(raw: str):
    """Parse a JSON object, tolerating code fences and surrounding chatter."""
    text = raw.strip()
    fence = re.match(r"^```(?:json)?\s*(.*?)\s*```$", text, re.S)
    if fence:
        text = fence.group(1)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        start, end = text.find("{"), text.rfind("}")
        if start == -1 or end <= start:
            raise
        return json.loads(text[start:end + 1])


def parse_predicates(raw: str, known_ids) -> PredicateSet:
    """Validate an extraction response and turn it into a PredicateSet."""
    try:
        data = loads_json_object(raw)
    except json.JSONDecodeError as exc:
        raise PredicateParseError(f"response is not JSON ({exc.msg})", raw) from exc
    try:
        jsonschema.validate(data, PREDICATE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise PredicateParseError(f"response violates schema: {exc.message}", raw) from exc

    known = set(known_ids)
    by_pair: dict[tuple[int, int], tuple[str, ...]] = {}
    for subj_key in sorted(data, key=parse_id):
        subj = parse_id(subj_key)
        if subj not in known:
            logger.warning("dropping unknown subject id %s", subj_key)
            continue
        for obj_key in sorted(data[subj_key], key=parse_id):
            obj = parse_id(obj_key)
            if obj not in known:
                logger.warning("dropping unknown object id %s", obj_key)
                continue
            if obj == subj:
                continue
            verbs = tuple(v.strip().lower() for v in data[subj_key][obj_key])
            by_pair[(subj, obj)] = tuple(v for v in verbs if v)
    return PredicateSet(by_pair)


def extract_predicates(captions: Mapping[int, str], llm) -> PredicateSet:
    """Ask the LLM for directed interaction verbs between captioned identities.

    With fewer than two identities no pair can exist and the backend is not
    called.
    """
    if len(captions) < 2:
        return PredicateSet({})
    raw = complete_text(llm, predicate_request(captions))
    return parse_predicates(raw, captions.keys())
