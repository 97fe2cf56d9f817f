"""Input validation helpers shared by the estimators and pure functions."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def check_probability(value: float, name: str) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


def check_positive_int(value: int, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_mask(mask, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Return ``mask`` as a 2-D boolean array, optionally checking its shape."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    if arr.dtype != bool:
        arr = arr != 0
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"mask shape {arr.shape} does not match frame shape {tuple(shape)}")
    return arr


def check_frame(frame) -> np.ndarray:
    arr = np.asarray(frame)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"frame must be an HxWx3 array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise ValueError(f"frame dtype must be uint8, got {arr.dtype}")
    return arr


def check_video(frames: Sequence) -> list[np.ndarray]:
    """Validate a frame sequence: non-empty, RGB uint8, constant size."""
    frames = [check_frame(f) for f in frames]
    if not frames:
        raise ValueError("video must contain at least one frame")
    shape = frames[0].shape
    for t, f in enumerate(frames):
        if f.shape != shape:
            raise ValueError(f"frame {t} has shape {f.shape}, expected {shape}")
    return frames
