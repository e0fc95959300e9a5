"""Content-aware scene segmentation.

A cut is placed before frame i whenever the content score (mean absolute
luminance difference between frame i and frame i-1, already on the 0..255
scale) exceeds the policy's scene threshold. Boundaries are half-open
frame ranges partitioning [0, frame_count).
"""

from __future__ import annotations

import numpy as np

from ..config import FilterPolicy
from ..errors import ValidationError
from ..frames import FrameStream
from ..models import Clip, clip_id_for

Boundary = tuple[int, int]


def content_scores(stream: FrameStream) -> np.ndarray:
    """Score for each frame i >= 1: mean |frame_i - frame_{i-1}|."""
    if stream.frame_count < 1:
        raise ValidationError("empty input")
    scores = np.zeros(stream.frame_count, dtype=np.float64)
    prev = stream.frame_at(0).astype(np.float64)
    for i in range(1, stream.frame_count):
        cur = stream.frame_at(i).astype(np.float64)
        scores[i] = np.abs(cur - prev).mean()
        prev = cur
    return scores


def segment(stream: FrameStream, policy: FilterPolicy) -> list[Boundary]:
    if stream.frame_count < 1:
        raise ValidationError("empty input")
    scores = content_scores(stream)
    cuts = [0]
    cuts.extend(int(i) for i in np.nonzero(scores > policy.scene_threshold)[0])
    cuts.append(stream.frame_count)
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)]


def discard_short(
    boundaries: list[Boundary],
    fps: float,
    policy: FilterPolicy,
    *,
    parent_video: str = "",
    width: int = 0,
    height: int = 0,
) -> list[Clip]:
    """Keep only clips at least min_clip_duration_s long (strict 'shorter than')."""
    if fps <= 0:
        raise ValidationError("fps must be positive")
    clips = []
    for start, end in boundaries:
        duration = (end - start) / fps
        if duration < policy.min_clip_duration_s:
            continue
        clips.append(
            Clip(
                id=clip_id_for(parent_video, start, end),
                parent_video=parent_video,
                start_s=start / fps,
                end_s=end / fps,
                width=width,
                height=height,
                start_frame=start,
                end_frame=end,
            )
        )
    return clips
