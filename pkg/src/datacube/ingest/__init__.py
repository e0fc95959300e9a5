from .segment import content_scores, discard_short, segment
from .dedup import (
    DedupRegistry,
    clip_fingerprint,
    fingerprints_match,
    frame_hash,
    hamming64,
    normalize_url,
)
from .quality import AnalyzerSet, FrameDiffMotionAnalyzer, GateDecision, analyze, quality_gate

__all__ = [
    "AnalyzerSet",
    "DedupRegistry",
    "FrameDiffMotionAnalyzer",
    "GateDecision",
    "analyze",
    "clip_fingerprint",
    "content_scores",
    "discard_short",
    "fingerprints_match",
    "frame_hash",
    "hamming64",
    "normalize_url",
    "quality_gate",
    "segment",
]
