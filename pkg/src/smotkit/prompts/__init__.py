"""Prompt templates shipped as text assets.

Placeholders are substituted by plain string replacement so that literal
braces in the templates (JSON examples) are left untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

TEMPLATE_VERSION = "1"

PLACEHOLDERS = {
    "summary": (),
    "instance_caption": ("{color}",),
    "predicate_extraction": ("{captions_json}",),
    "synset_selection": ("{sentences[obj_id]}", "{definitions}"),
}


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    text: str

    @property
    def placeholders(self) -> tuple[str, ...]:
        return PLACEHOLDERS[self.template_id]

    def render(self, values: dict[str, str] | None = None) -> str:
        """Substitute every placeholder; ``values`` keys are the placeholder tokens."""
        values = values or {}
        expected = set(self.placeholders)
        if set(values) != expected:
            raise ValueError(
                f"template {self.template_id} needs exactly {sorted(expected)}, got {sorted(values)}"
            )
        out = self.text
        for token, value in values.items():
            out = out.replace(token, value)
        return out


@lru_cache(maxsize=None)
def load_template(template_id: str) -> PromptTemplate:
    if template_id not in PLACEHOLDERS:
        raise KeyError(f"unknown prompt template {template_id!r}")
    text = resources.files(__package__).joinpath(f"{template_id}.txt").read_text(encoding="utf-8")
    return PromptTemplate(template_id, text)
