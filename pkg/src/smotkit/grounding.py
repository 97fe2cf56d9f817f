"""Contour extraction and grounded-clip rendering."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_mask, check_positive_int, check_video
from .config import TrackerConfig
from .geometry import mask_tight_box

# Channel values are 0 or 255 only, so any frame content in 1..254 always differs.
PALETTE: tuple[tuple[str, tuple[int, int, int]], ...] = (
    ("red", (255, 0, 0)),
    ("green", (0, 255, 0)),
    ("blue", (0, 0, 255)),
    ("yellow", (255, 255, 0)),
    ("magenta", (255, 0, 255)),
    ("cyan", (0, 255, 255)),
    ("white", (255, 255, 255)),
)


class GroundingMode(str, enum.Enum):
    SINGLE_CONTOUR = "single_contour"
    MULTI_CONTOUR = "multi_contour"
    SINGLE_BOX = "single_box"


@dataclass(frozen=True, eq=False)
class Contour:
    identity: int
    pixels: np.ndarray  # boolean bitmap of boundary pixels

    @property
    def coords(self) -> set[tuple[int, int]]:
        rows, cols = np.nonzero(self.pixels)
        return {(int(c), int(r)) for r, c in zip(rows, cols)}

    @property
    def empty(self) -> bool:
        return not self.pixels.any()


@dataclass(frozen=True, eq=False)
class GroundedClip:
    frames: tuple[np.ndarray, ...]
    target_identity: int
    mode: GroundingMode
    target_color: str


def extract_contour(mask, identity: int = 0) -> Contour:
    """Inner 4-connected boundary: set pixels with an unset 4-neighbour.

    Pixels on the frame border count as having an outside neighbour.
    """
    bitmap = check_mask(getattr(mask, "bitmap", mask))
    padded = np.pad(bitmap, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return Contour(identity, bitmap & ~interior)


def thicken_contour(contour: Contour | np.ndarray, width: int) -> np.ndarray:
    """Dilate by a square of side ``2 * (width // 2) + 1``, clipped to the frame."""
    width = check_positive_int(width, "width")
    pixels = contour.pixels if isinstance(contour, Contour) else check_mask(contour)
    radius = width // 2
    if radius == 0 or not pixels.any():
        return pixels.copy()
    structure = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_dilation(pixels, structure=structure)


def box_outline(mask: np.ndarray) -> np.ndarray:
    """Perimeter cells of the tight box of ``mask`` (empty if the mask is empty)."""
    bitmap = check_mask(mask)
    box = mask_tight_box(bitmap)
    if box is None:
        return np.zeros_like(bitmap)
    filled = box.to_mask(*bitmap.shape)
    return extract_contour(filled).pixels


def color_for(identity: int, target: int) -> tuple[str, tuple[int, int, int]]:
    """Target always gets palette entry 0; other identities cycle through the rest."""
    if identity == target:
        return PALETTE[0]
    return PALETTE[1 + (identity - 1) % (len(PALETTE) - 1)]


def render_bands(tracks, t: int, target: int, mode: GroundingMode, width: int,
                 shape: tuple[int, int]) -> list[tuple[np.ndarray, tuple[int, int, int]]]:
    """Stroke bitmaps and their colors for frame ``t``, in paint order."""
    mode = GroundingMode(mode)
    target_track = tracks.get(target)
    target_mask = target_track.mask_at(t)
    if target_mask is None or target_mask.empty:
        return []
    if mode is GroundingMode.SINGLE_CONTOUR:
        band = thicken_contour(extract_contour(target_mask.bitmap), width)
        return [(band, PALETTE[0][1])]
    if mode is GroundingMode.SINGLE_BOX:
        band = thicken_contour(box_outline(target_mask.bitmap), width)
        return [(band, PALETTE[0][1])]
    bands = []
    # target painted last so it stays on top where strokes overlap
    order = sorted(tracks.identities, key=lambda i: (i == target, i))
    for identity in order:
        m = tracks.get(identity).mask_at(t)
        if m is None or m.empty:
            continue
        band = thicken_contour(extract_contour(m.bitmap), width)
        bands.append((band, color_for(identity, target)[1]))
    return bands


def render_grounded_clip(video: Sequence[np.ndarray], tracks, target: int,
                         mode: GroundingMode | str = GroundingMode.SINGLE_CONTOUR,
                         cfg: TrackerConfig | None = None) -> GroundedClip:
    """Overlay the grounding strokes for ``target`` on every frame of ``video``.

    Frames where the target's mask is empty are returned unchanged (same array
    contents, copied).
    """
    cfg = cfg or TrackerConfig()
    mode = GroundingMode(mode)
    frames = check_video(video)
    if target not in tracks:
        raise KeyError(f"unknown target identity {target}")
    shape = frames[0].shape[:2]
    out = []
    for t, frame in enumerate(frames):
        rendered = frame.copy()
        for band, rgb in render_bands(tracks, t, target, mode, cfg.contour_width, shape):
            rendered[band] = rgb
        out.append(rendered)
    return GroundedClip(tuple(out), target, mode, PALETTE[0][0])


class ContourGrounder(BaseEstimator, TransformerMixin):
    """Transformer from a video to one grounded clip per identity.

    ``fit`` stores the TrackSet; ``transform`` renders clips for a video.
    """

    def __init__(self, mode: str = GroundingMode.SINGLE_CONTOUR.value, contour_width: int = 5):
        self.mode = mode
        self.contour_width = contour_width

    def fit(self, X=None, y=None, tracks=None):
        if tracks is None:
            raise ValueError("ContourGrounder.fit needs tracks=")
        self.tracks_ = tracks
        return self

    def transform(self, X) -> dict[int, GroundedClip]:
        cfg = TrackerConfig(contour_width=self.contour_width)
        return {
            identity: render_grounded_clip(X, self.tracks_, identity, self.mode, cfg)
            for identity in self.tracks_.identities
        }
