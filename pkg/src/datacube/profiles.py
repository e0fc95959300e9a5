"""Semantic profiling: frame sampling plans, profile construction via a
vision-language provider, and compliance filtering."""

from __future__ import annotations

import json
import re
import threading
from dataclasses import asdict, dataclass, field
from typing import Protocol

from .errors import ProviderError, ValidationError
from .frames import FrameStream
from .models import Clip, ClipStatus

PROFILE_DIMENSIONS = ("keywords", "style", "content", "viewpoint")

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")


def tokens_of(text: str) -> list[str]:
    """Lowercased word tokens; hyphenated compounds stay whole."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class SemanticProfile:
    clip_id: str
    keywords: list[str]
    visual_style: str
    content: str
    camera_viewpoint: str
    language: str = "en"
    provider_version: str = ""

    def __post_init__(self):
        seen = []
        for kw in self.keywords:
            kw = kw.lower()
            if kw and kw not in seen:
                seen.append(kw)
        self.keywords = seen

    def to_json_dict(self) -> dict:
        return asdict(self)

    def text_for(self, dimension: str) -> str:
        if dimension == "keywords":
            return " ".join(self.keywords)
        if dimension == "style":
            return self.visual_style
        if dimension == "content":
            return self.content
        if dimension == "viewpoint":
            return self.camera_viewpoint
        if dimension == "composite":
            return " ".join(
                [" ".join(self.keywords), self.visual_style, self.content, self.camera_viewpoint]
            )
        raise ValidationError(f"unknown profile dimension {dimension!r}")

    def all_tokens(self) -> set[str]:
        return set(tokens_of(self.text_for("composite")))


@dataclass
class ComplianceVerdict:
    compliant: bool
    reason: str = ""

    def __post_init__(self):
        if not self.compliant and not self.reason:
            raise ValidationError("non-compliant verdict needs a reason")


@dataclass
class FrameSamplePlan:
    sample_count: int
    indices: list[int] = field(default_factory=list)


def plan_samples(frame_count: int, sample_count: int = 8) -> FrameSamplePlan:
    """Uniformly spaced frame indices; repeated indices from very short
    clips collapse so the plan stays strictly increasing."""
    if frame_count < 1 or sample_count < 1:
        raise ValidationError("frame_count and sample_count must be >= 1")
    if sample_count == 1:
        return FrameSamplePlan(sample_count=1, indices=[0])
    raw = [
        (k * (frame_count - 1)) // (sample_count - 1) for k in range(sample_count)
    ]
    indices = sorted(set(raw))
    return FrameSamplePlan(sample_count=sample_count, indices=indices)


class ProfilerProvider(Protocol):
    version: str

    def profile(self, clip: Clip, stream: FrameStream, plan: FrameSamplePlan) -> dict: ...


def build_profile(
    clip: Clip,
    plan: FrameSamplePlan,
    provider: ProfilerProvider,
    stream: FrameStream,
) -> SemanticProfile:
    """Run the provider over the sampled frames and validate the four
    dimensions; the clip only advances to PROFILED on a valid result."""
    if clip.status is not ClipStatus.ANALYZED:
        raise ValidationError(
            f"clip {clip.id} must be ANALYZED to profile, is {clip.status.value}"
        )
    try:
        raw = provider.profile(clip, stream, plan)
    except ProviderError:
        raise
    except Exception as exc:  # provider bugs surface as retryable failures
        raise ProviderError(f"profiler provider failed: {exc}") from exc
    missing = [
        key
        for key in ("keywords", "visual_style", "content", "camera_viewpoint")
        if key not in raw or raw[key] in (None, "")
    ]
    if missing:
        raise ValidationError(
            f"profiler output missing dimensions: {', '.join(missing)}",
            {"missing": missing},
        )
    profile = SemanticProfile(
        clip_id=clip.id,
        keywords=list(raw["keywords"]),
        visual_style=str(raw["visual_style"]),
        content=str(raw["content"]),
        camera_viewpoint=str(raw["camera_viewpoint"]),
        language=str(raw.get("language", "en")),
        provider_version=provider.version,
    )
    clip.advance(ClipStatus.PROFILED)
    return profile


def compliance_filter(profile: SemanticProfile, blocklist) -> ComplianceVerdict:
    """Non-compliant iff any blocklist term appears as a whole token in
    the keywords or content text (case-insensitive)."""
    haystack = set(profile.keywords) | set(tokens_of(profile.content))
    for term in blocklist:
        if term.lower() in haystack:
            return ComplianceVerdict(compliant=False, reason=f"blocked term: {term.lower()}")
    return ComplianceVerdict(compliant=True)


class ProfileStore:
    """Last-write-wins profile persistence keyed by clip_id.

    Wire format (one JSON object per clip, UTF-8): {clip_id, keywords,
    visual_style, content, camera_viewpoint, language, provider_version}.
    """

    def __init__(self):
        self._profiles: dict[str, SemanticProfile] = {}
        self._lock = threading.Lock()

    def upsert(self, profile: SemanticProfile) -> None:
        with self._lock:
            self._profiles[profile.clip_id] = profile

    def get(self, clip_id: str) -> SemanticProfile | None:
        with self._lock:
            return self._profiles.get(clip_id)

    def __len__(self) -> int:
        with self._lock:
            return len(self._profiles)

    def dump_jsonl(self) -> str:
        with self._lock:
            rows = [p.to_json_dict() for p in self._profiles.values()]
        return "\n".join(json.dumps(r, ensure_ascii=False, sort_keys=True) for r in rows)

    def load_record(self, record: dict) -> None:
        profile = SemanticProfile(**record)
        self.upsert(profile)
