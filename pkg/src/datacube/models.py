"""Domain records shared across pipeline stages."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

from .errors import ValidationError


class ClipStatus(str, Enum):
    SEGMENTED = "SEGMENTED"
    ANALYZED = "ANALYZED"
    REJECTED = "REJECTED"
    PROFILED = "PROFILED"
    INDEXED = "INDEXED"


_STATUS_RANK = {
    ClipStatus.SEGMENTED: 0,
    ClipStatus.ANALYZED: 1,
    ClipStatus.PROFILED: 2,
    ClipStatus.INDEXED: 3,
}


@dataclass
class RawVideo:
    id: str
    duration_s: float
    width: int
    height: int
    fps: float
    source_url: str | None = None
    object_ref: "ObjectRef | None" = None

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValidationError("video duration_s must be positive")
        if self.width < 1 or self.height < 1:
            raise ValidationError("video dimensions must be >= 1")
        if self.fps <= 0:
            raise ValidationError("video fps must be positive")


@dataclass
class QualitySignals:
    motion_score: float
    ocr_coverage: float
    aesthetic_a: float
    aesthetic_b: float
    fingerprint: list[int] = field(default_factory=list)
    provider_versions: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.motion_score <= 100.0:
            raise ValidationError("motion_score must be in [0, 100]")
        if not 0.0 <= self.ocr_coverage <= 1.0:
            raise ValidationError("ocr_coverage must be in [0, 1]")


@dataclass
class Clip:
    id: str
    parent_video: str
    start_s: float
    end_s: float
    width: int
    height: int
    start_frame: int = 0
    end_frame: int = 0
    object_ref: "ObjectRef | None" = None
    fingerprint: list[int] = field(default_factory=list)
    quality: QualitySignals | None = None
    status: ClipStatus = ClipStatus.SEGMENTED
    reject_reason: str | None = None
    error: str | None = None

    def __post_init__(self):
        if self.start_s >= self.end_s:
            raise ValidationError("clip start_s must be < end_s")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def advance(self, new_status: ClipStatus, reason: str | None = None) -> None:
        """Move status forward; REJECTED is terminal, no backward moves."""
        if self.status is ClipStatus.REJECTED:
            raise ValidationError(f"clip {self.id} is REJECTED (terminal)")
        if new_status is ClipStatus.REJECTED:
            if not reason:
                raise ValidationError("rejection requires a reason code")
            self.status = ClipStatus.REJECTED
            self.reject_reason = reason
            return
        if _STATUS_RANK[new_status] <= _STATUS_RANK[self.status]:
            raise ValidationError(
                f"illegal clip transition {self.status.value} -> {new_status.value}"
            )
        self.status = new_status


def clip_id_for(parent_video: str, start_frame: int, end_frame: int) -> str:
    digest = hashlib.sha1(
        f"{parent_video}:{start_frame}:{end_frame}".encode()
    ).hexdigest()
    return f"cl_{digest[:12]}"
