"""Pipeline constants shared across stages."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from ._validation import check_positive_int, check_probability


@dataclass(frozen=True)
class TrackerConfig:
    """Thresholds for detection filtering, identity birth, grounding and retrieval.

    ``tau_new`` is the IoU below which a detection starts a new identity.
    ``contour_width`` is the stroke width of rendered contours in pixels and
    ``top_k`` the number of gloss candidates kept per predicate.
    """

    confidence_threshold: float = 0.8
    tau_new: float = 0.35
    contour_width: int = 5
    top_k: int = 5

    def __post_init__(self):
        check_probability(self.confidence_threshold, "confidence_threshold")
        check_probability(self.tau_new, "tau_new")
        check_positive_int(self.contour_width, "contour_width")
        check_positive_int(self.top_k, "top_k")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrackerConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown tracker config keys: {sorted(unknown)}")
        return cls(**data)
