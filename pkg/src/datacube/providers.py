"""Deterministic provider implementations.

Every neural component (VLM profiler, OCR, aesthetics, reranker, deep
matcher) is a provider behind a small contract; these reference
implementations read the annotations embedded in synthetic video
descriptors or compute cheap text statistics, so the whole platform runs
hermetically. Real models drop in by implementing the same methods.
"""

from __future__ import annotations

import threading
import time

from .frames import FrameStream, Scene, VideoDescriptor
from .models import Clip
from .profiles import FrameSamplePlan, SemanticProfile, tokens_of
from .retrieval.enrich import EnrichedQuery


class DescriptorCatalog:
    """video_id -> descriptor registry backing the mock providers."""

    def __init__(self):
        self._descriptors: dict[str, VideoDescriptor] = {}
        self._lock = threading.Lock()

    def register(self, video_id: str, descriptor: VideoDescriptor) -> None:
        with self._lock:
            self._descriptors[video_id] = descriptor

    def get(self, video_id: str) -> VideoDescriptor:
        with self._lock:
            return self._descriptors[video_id]

    def scene_for(self, clip: Clip) -> Scene:
        descriptor = self.get(clip.parent_video)
        midpoint = (clip.start_s + clip.end_s) / 2.0
        return descriptor.scene_at(midpoint)


class DescriptorOcrAnalyzer:
    version = "mock-ocr/1"

    def __init__(self, catalog: DescriptorCatalog):
        self.catalog = catalog

    def coverage(self, clip: Clip, stream: FrameStream) -> float:
        return float(self.catalog.scene_for(clip).ocr_coverage)


class DescriptorAestheticAnalyzer:
    version = "mock-aesthetics/1"

    def __init__(self, catalog: DescriptorCatalog):
        self.catalog = catalog

    def scores(self, clip: Clip, stream: FrameStream) -> tuple[float, float]:
        scene = self.catalog.scene_for(clip)
        return float(scene.aesthetic_a), float(scene.aesthetic_b)


class DescriptorProfiler:
    """Surfaces the scene annotations as the four profile dimensions."""

    version = "mock-profiler/1"

    def __init__(self, catalog: DescriptorCatalog):
        self.catalog = catalog

    def profile(self, clip: Clip, stream: FrameStream, plan: FrameSamplePlan) -> dict:
        # touch the sampled frames like a real VLM would consume them
        for index in plan.indices[:1]:
            stream.frame_at(clip.start_frame + index)
        scene = self.catalog.scene_for(clip)
        keywords = [k.lower() for k in scene.labels] or ["unlabeled"]
        content = scene.content or " ".join(keywords)
        return {
            "keywords": keywords,
            "visual_style": scene.style,
            "content": content,
            "camera_viewpoint": scene.viewpoint,
            "language": scene.language,
        }


def _jaccard(a: set[str], b: set[str]) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


class JaccardReranker:
    """Token-overlap reranker; scores in [0, 1]."""

    version = "jaccard-reranker/1"

    def score(self, query_text: str, documents: list[str]) -> list[float]:
        query_tokens = set(tokens_of(query_text))
        return [_jaccard(query_tokens, set(tokens_of(doc))) for doc in documents]


class JaccardMatcher:
    """Deep-matching mock: relevance is token overlap with the positive
    query text; constraints fail when any excluded term occurs in the
    profile keywords or content."""

    version = "jaccard-matcher/1"

    def __init__(self, latency_s: float = 0.0):
        self.latency_s = latency_s

    def match(
        self,
        enriched: EnrichedQuery,
        profile: SemanticProfile,
        frame_ref: str | None = None,
    ) -> tuple[float, bool]:
        if self.latency_s > 0:
            time.sleep(self.latency_s)
        query_tokens = set(tokens_of(enriched.positive_text()))
        profile_tokens = set(profile.keywords) | set(tokens_of(profile.content))
        relevance = _jaccard(query_tokens, profile_tokens | set(tokens_of(profile.visual_style)) | set(tokens_of(profile.camera_viewpoint)))
        passes = not any(term in profile_tokens for term in enriched.must_not_terms)
        return relevance, passes
