"""Boxes, detections and masks, plus the pure geometry used by the tracker."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._validation import check_mask, check_probability
from .config import TrackerConfig

PERSON = "person"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel units, ``(x, y)`` is the top-left corner.

    The box covers the half-open region ``[x, x + w) x [y, y + h)``, so the
    tight box of a single pixel at column 3, row 4 is ``(3, 4, 1, 1)``.
    """

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"box coordinate {name} is not finite")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box width and height must be positive, got {self.w}x{self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def clamp(self, width: int, height: int) -> "BoundingBox | None":
        """Clip to the frame; ``None`` when nothing of the box is left."""
        x1, y1 = max(self.x, 0.0), max(self.y, 0.0)
        x2, y2 = min(self.x2, float(width)), min(self.y2, float(height))
        if x2 <= x1 or y2 <= y1:
            return None
        return BoundingBox(x1, y1, x2 - x1, y2 - y1)

    def to_mask(self, height: int, width: int) -> np.ndarray:
        """Rasterize: every pixel whose unit cell overlaps the box is set."""
        mask = np.zeros((height, width), dtype=bool)
        c0, r0 = max(int(math.floor(self.x)), 0), max(int(math.floor(self.y)), 0)
        c1, r1 = min(int(math.ceil(self.x2)), width), min(int(math.ceil(self.y2)), height)
        if c1 > c0 and r1 > r0:
            mask[r0:r1, c0:c1] = True
        return mask


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    confidence: float
    class_label: str = PERSON

    def __post_init__(self):
        check_probability(self.confidence, "confidence")


@dataclass(frozen=True, eq=False)
class InstanceMask:
    """Binary mask of one identity at one frame; may be empty."""

    frame_index: int
    identity: int
    bitmap: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bitmap", check_mask(self.bitmap))

    @property
    def empty(self) -> bool:
        return not self.bitmap.any()

    def __eq__(self, other):
        if not isinstance(other, InstanceMask):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.identity == other.identity
            and self.bitmap.shape == other.bitmap.shape
            and bool(np.array_equal(self.bitmap, other.bitmap))
        )


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union in continuous box coordinates."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def mask_tight_box(mask) -> BoundingBox | None:
    """Minimal box covering every set pixel, or ``None`` for an empty mask."""
    bitmap = mask.bitmap if isinstance(mask, InstanceMask) else check_mask(mask)
    rows = np.flatnonzero(bitmap.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(bitmap.any(axis=0))
    return BoundingBox(
        float(cols[0]), float(rows[0]),
        float(cols[-1] - cols[0] + 1), float(rows[-1] - rows[0] + 1),
    )


def filter_detections(dets: Iterable[Detection], cfg: TrackerConfig | None = None) -> list[Detection]:
    """Keep person detections with ``confidence >= cfg.confidence_threshold``, in order."""
    threshold = (cfg or TrackerConfig()).confidence_threshold
    return [d for d in dets if d.class_label == PERSON and d.confidence >= threshold]
