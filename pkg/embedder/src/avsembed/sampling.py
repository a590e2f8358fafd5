"""Uniform frame sampling at a fixed time interval.

A video of duration D sampled at interval t yields frames at timestamps
0, t, 2t, ... for floor(D / t) + 1 frames in total, optionally capped.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import DecodeError

log = logging.getLogger("avsembed")


@dataclass
class SamplingSpec:
    interval_seconds: float = 0.5
    max_frames: int | None = None

    def __post_init__(self):
        if self.interval_seconds <= 0:
            raise ValueError(f"interval must be positive, got {self.interval_seconds}")
        if self.max_frames is not None and self.max_frames < 1:
            raise ValueError(f"max_frames must be positive, got {self.max_frames}")

    def timestamps(self, duration: float) -> list[float]:
        """Sampling timestamps for a clip of the given duration."""
        if duration < 0:
            raise ValueError(f"negative duration {duration}")
        count = int(math.floor(duration / self.interval_seconds)) + 1
        if self.max_frames is not None:
            count = min(count, self.max_frames)
        return [i * self.interval_seconds for i in range(count)]


def video_duration(path: str | Path) -> tuple[cv2.VideoCapture, float, float, int]:
    """Open a video and return (capture, duration, fps, frame_count)."""
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        cap.release()
        raise DecodeError(f"cannot open video {path}")
    fps = cap.get(cv2.CAP_PROP_FPS)
    frame_count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
    if fps <= 0 or frame_count <= 0:
        cap.release()
        raise DecodeError(f"video {path} reports no frames or unknown rate")
    return cap, frame_count / fps, fps, frame_count


def sample_frames(path: str | Path, spec: SamplingSpec) -> list[np.ndarray]:
    """Decode RGB frames at the spec's timestamps, in temporal order."""
    cap, duration, fps, frame_count = video_duration(path)
    try:
        frames: list[np.ndarray] = []
        for t in spec.timestamps(duration):
            index = min(int(round(t * fps)), frame_count - 1)
            cap.set(cv2.CAP_PROP_POS_FRAMES, index)
            ok, bgr = cap.read()
            if not ok:
                raise DecodeError(f"video {path}: failed to read frame at {t:.2f}s")
            frames.append(cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB))
        return frames
    finally:
        cap.release()
