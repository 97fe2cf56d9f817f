"""Detection-initialized mask tracking with an IoU birth gate."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_frame, check_mask
from .config import TrackerConfig
from .geometry import BoundingBox, Detection, InstanceMask, filter_detections, iou, mask_tight_box

logger = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; carries where it happened."""

    def __init__(self, stage: str, message: str, frame_index: int | None = None,
                 identities: Sequence[int] = (), cause: BaseException | None = None):
        self.stage = stage
        self.frame_index = frame_index
        self.identities = tuple(identities)
        self.cause = cause
        where = []
        if frame_index is not None:
            where.append(f"frame {frame_index}")
        if self.identities:
            where.append(f"identities {list(self.identities)}")
        suffix = f" [{', '.join(where)}]" if where else ""
        super().__init__(f"{stage}: {message}{suffix}")


@dataclass(frozen=True, eq=False)
class Track:
    """Masks and derived boxes of one identity from its birth frame onwards."""

    identity: int
    birth_frame: int
    masks: tuple[np.ndarray, ...] = ()
    boxes: tuple[BoundingBox | None, ...] = ()

    @property
    def last_frame(self) -> int:
        return self.birth_frame + len(self.masks) - 1

    def covers(self, t: int) -> bool:
        return self.birth_frame <= t <= self.last_frame

    def mask_at(self, t: int) -> InstanceMask | None:
        if not self.covers(t):
            return None
        return InstanceMask(t, self.identity, self.masks[t - self.birth_frame])

    def box_at(self, t: int) -> BoundingBox | None:
        if not self.covers(t):
            return None
        return self.boxes[t - self.birth_frame]

    def current_box(self) -> BoundingBox | None:
        return self.boxes[-1] if self.boxes else None

    def extended(self, mask: np.ndarray) -> "Track":
        return replace(self, masks=self.masks + (mask,), boxes=self.boxes + (mask_tight_box(mask),))

    def __eq__(self, other):
        if not isinstance(other, Track):
            return NotImplemented
        return (
            self.identity == other.identity
            and self.birth_frame == other.birth_frame
            and self.boxes == other.boxes
            and len(self.masks) == len(other.masks)
            and all(np.array_equal(a, b) for a, b in zip(self.masks, other.masks))
        )


@dataclass(frozen=True, eq=False)
class TrackSet:
    """Immutable snapshot of every identity after ``num_frames`` frames."""

    tracks: tuple[Track, ...] = ()
    num_frames: int = 0
    frame_shape: tuple[int, int] | None = None
    next_id: int = 1

    @property
    def identities(self) -> list[int]:
        return [tr.identity for tr in self.tracks]

    def get(self, identity: int) -> Track:
        for tr in self.tracks:
            if tr.identity == identity:
                return tr
        raise KeyError(f"unknown track identity {identity}")

    def __contains__(self, identity) -> bool:
        return any(tr.identity == identity for tr in self.tracks)

    def __len__(self) -> int:
        return len(self.tracks)

    def __iter__(self):
        return iter(self.tracks)

    def current_boxes(self) -> dict[int, BoundingBox | None]:
        t = self.num_frames - 1
        return {tr.identity: tr.box_at(t) for tr in self.tracks}

    def boxes_by_frame(self) -> list[dict[int, BoundingBox]]:
        """Per frame, the identities with a non-empty mask and their boxes."""
        frames: list[dict[int, BoundingBox]] = [{} for _ in range(self.num_frames)]
        for tr in self.tracks:
            for k, box in enumerate(tr.boxes):
                if box is not None:
                    frames[tr.birth_frame + k][tr.identity] = box
        return frames

    def __eq__(self, other):
        if not isinstance(other, TrackSet):
            return NotImplemented
        return (
            self.num_frames == other.num_frames
            and self.frame_shape == other.frame_shape
            and self.next_id == other.next_id
            and self.tracks == other.tracks
        )


def max_iou(box: BoundingBox, boxes: Iterable[BoundingBox | None]) -> float:
    """Largest IoU against ``boxes``; empty masks (``None``) count as 0."""
    return max((iou(box, b) for b in boxes if b is not None), default=0.0)


def gate_new_identity(det: Detection, active: TrackSet | Iterable[BoundingBox | None],
                      cfg: TrackerConfig | None = None) -> bool:
    """True iff the detection overlaps no active identity by ``tau_new`` or more.

    ``active`` is either a TrackSet (its boxes at the latest frame are used) or
    an iterable of current boxes.
    """
    cfg = cfg or TrackerConfig()
    boxes = active.current_boxes().values() if isinstance(active, TrackSet) else active
    return max_iou(det.box, boxes) < cfg.tau_new


def step_tracker(frame, dets: Sequence[Detection], state: TrackSet, trk,
                 cfg: TrackerConfig | None = None) -> TrackSet:
    """Advance ``state`` by one frame.

    Existing identities are propagated by the backend; each surviving detection
    that passes the birth gate starts one new identity, in detection order. The
    gate is evaluated against post-propagation boxes at this frame, including
    identities born earlier in the same frame. Existing identities are never
    re-associated to detections here.
    """
    cfg = cfg or TrackerConfig()
    frame = check_frame(frame)
    t = state.num_frames
    shape = frame.shape[:2]
    if state.frame_shape is not None and tuple(state.frame_shape) != shape:
        raise StageError("track", f"frame shape {shape} differs from {state.frame_shape}", t)

    try:
        propagated = trk.propagate(frame, t, state) if state.tracks else {}
    except Exception as exc:
        raise StageError("track", f"mask propagation failed: {exc}", t, state.identities, exc) from exc

    tracks = []
    for tr in state.tracks:
        mask = propagated.get(tr.identity)
        try:
            mask = np.zeros(shape, dtype=bool) if mask is None else check_mask(mask, shape)
        except ValueError as exc:
            raise StageError("track", f"bad propagated mask: {exc}", t, [tr.identity], exc) from exc
        tracks.append(tr.extended(mask))

    next_id = state.next_id
    current = [tr.current_box() for tr in tracks]
    for det in filter_detections(dets, cfg):
        if max_iou(det.box, current) >= cfg.tau_new:
            continue
        identity = next_id
        try:
            mask = check_mask(trk.prompt(frame, t, identity, det.box), shape)
        except Exception as exc:
            raise StageError("track", f"prompting new identity failed: {exc}", t, [identity], exc) from exc
        newborn = Track(identity, t).extended(mask)
        tracks.append(newborn)
        current.append(newborn.current_box())
        next_id += 1
        logger.debug("frame %d: new identity %d from %s", t, identity, det.box)

    return TrackSet(tuple(tracks), t + 1, shape, next_id)


class PersonTracker(BaseEstimator):
    """Online person tracker composed from a detector and a promptable mask tracker.

    ``partial_fit`` consumes one frame, ``fit`` a whole video. The result is
    kept in ``tracks_``.
    """

    def __init__(self, detector=None, mask_tracker=None, confidence_threshold: float = 0.8,
                 tau_new: float = 0.35):
        self.detector = detector
        self.mask_tracker = mask_tracker
        self.confidence_threshold = confidence_threshold
        self.tau_new = tau_new

    def _config(self) -> TrackerConfig:
        return TrackerConfig(confidence_threshold=self.confidence_threshold, tau_new=self.tau_new)

    def partial_fit(self, frame, detections: Sequence[Detection] | None = None):
        if self.mask_tracker is None:
            raise ValueError("PersonTracker needs a mask_tracker backend")
        state = getattr(self, "tracks_", None)
        if state is None:
            state = TrackSet()
        if detections is None:
            if self.detector is None:
                raise ValueError("no detections given and no detector backend set")
            try:
                detections = self.detector.detect(frame, state.num_frames)
            except Exception as exc:
                raise StageError("detect", str(exc), state.num_frames, cause=exc) from exc
        self.tracks_ = step_tracker(frame, detections, state, self.mask_tracker, self._config())
        return self

    def fit(self, frames, y=None):
        self.tracks_ = TrackSet()
        for frame in frames:
            self.partial_fit(frame)
        return self

    def fit_predict(self, frames, y=None) -> TrackSet:
        return self.fit(frames).tracks_
