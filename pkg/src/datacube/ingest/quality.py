"""Quality signal extraction and the accept/reject gate.

The motion analyzer here is the deterministic reference (mean absolute
luminance difference between samples, 0 = identical, 100 = maximal);
optical-flow models plug in through the same pair_score contract. OCR
and aesthetics always come from providers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..config import FilterPolicy
from ..errors import ValidationError
from ..frames import FrameStream
from ..models import Clip, ClipStatus, QualitySignals
from .dedup import clip_fingerprint


class MotionAnalyzer(Protocol):
    version: str

    def pair_score(self, a: np.ndarray, b: np.ndarray) -> float: ...


class OcrAnalyzer(Protocol):
    version: str

    def coverage(self, clip: Clip, stream: FrameStream) -> float: ...


class AestheticAnalyzer(Protocol):
    version: str

    def scores(self, clip: Clip, stream: FrameStream) -> tuple[float, float]: ...


class FrameDiffMotionAnalyzer:
    """Reference implementation: identical frames -> 0, all-255 delta -> 100."""

    version = "frame-diff/1"

    def pair_score(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(
            np.abs(a.astype(np.float64) - b.astype(np.float64)).mean() / 255.0 * 100.0
        )


@dataclass
class AnalyzerSet:
    motion: MotionAnalyzer
    ocr: OcrAnalyzer
    aesthetic: AestheticAnalyzer


def motion_sample_indices(clip: Clip, fps: float, interval_s: float) -> list[int]:
    """Frame indices at interval_s steps through the clip."""
    indices = []
    j = 0
    while True:
        t = clip.start_s + j * interval_s
        if t >= clip.end_s:
            break
        idx = min(int(round(t * fps)), clip.end_frame - 1)
        indices.append(idx)
        j += 1
    return indices


def analyze(
    clip: Clip,
    stream: FrameStream,
    analyzers: AnalyzerSet,
    policy: FilterPolicy,
) -> QualitySignals:
    """Compute quality signals for a SEGMENTED clip and mark it ANALYZED."""
    if clip.status is not ClipStatus.SEGMENTED:
        raise ValidationError(
            f"clip {clip.id} must be SEGMENTED to analyze, is {clip.status.value}"
        )
    indices = motion_sample_indices(clip, stream.fps, policy.motion_sample_interval_s)
    if len(indices) >= 2:
        scores = []
        prev = stream.frame_at(indices[0])
        for idx in indices[1:]:
            cur = stream.frame_at(idx)
            scores.append(analyzers.motion.pair_score(prev, cur))
            prev = cur
        motion = float(np.clip(np.mean(scores), 0.0, 100.0))
    else:
        motion = 0.0
    ocr = analyzers.ocr.coverage(clip, stream)
    aes_a, aes_b = analyzers.aesthetic.scores(clip, stream)
    fingerprint = list(clip.fingerprint)
    if not fingerprint:
        fingerprint = clip_fingerprint(
            stream,
            clip.start_frame,
            clip.end_frame,
            policy.fingerprint_interval_s,
            policy.fingerprint_min_samples,
        )
    clip.fingerprint = fingerprint
    signals = QualitySignals(
        motion_score=motion,
        ocr_coverage=ocr,
        aesthetic_a=aes_a,
        aesthetic_b=aes_b,
        fingerprint=fingerprint,
        provider_versions={
            "motion": analyzers.motion.version,
            "ocr": analyzers.ocr.version,
            "aesthetic": analyzers.aesthetic.version,
        },
    )
    clip.quality = signals
    clip.advance(ClipStatus.ANALYZED)
    return signals


@dataclass
class GateDecision:
    accepted: bool
    reason: str | None = None


def quality_gate(clip: Clip, policy: FilterPolicy) -> GateDecision:
    """Reject nearly static clips (strict motion threshold) and clips
    violating any configured optional bound; rejection is terminal."""
    if clip.status is not ClipStatus.ANALYZED or clip.quality is None:
        raise ValidationError(f"clip {clip.id} must be ANALYZED before the gate")
    q = clip.quality
    reason = None
    if q.motion_score < policy.min_motion_score:
        reason = "static"
    elif policy.max_ocr_coverage is not None and q.ocr_coverage > policy.max_ocr_coverage:
        reason = "ocr"
    elif policy.max_aesthetic_a is not None and q.aesthetic_a > policy.max_aesthetic_a:
        reason = "aesthetic"
    elif policy.min_aesthetic_b is not None and q.aesthetic_b < policy.min_aesthetic_b:
        reason = "aesthetic"
    if reason is not None:
        clip.advance(ClipStatus.REJECTED, reason=reason)
        return GateDecision(accepted=False, reason=reason)
    return GateDecision(accepted=True)
