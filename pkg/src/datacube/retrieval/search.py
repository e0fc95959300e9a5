"""Coarse-to-fine retrieval: per-dimension candidate search, weighted
score fusion, and neural re-ranking of the top window."""

from __future__ import annotations

import itertools
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Protocol

from ..config import RetrievalConfig
from ..embed import Embedder
from ..errors import ProviderError, ValidationError
from ..index import IndexStore, MetadataPredicate
from ..profiles import ProfileStore
from .enrich import EnrichedQuery, VocabularyEnricher


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class Query:
    text: str
    sources: list[str]
    user: str
    constraints: MetadataPredicate = field(default_factory=MetadataPredicate)
    candidate_size: int | None = None

    def __post_init__(self):
        if not self.sources:
            raise ValidationError("query needs at least one source repository")


@dataclass
class RankedResult:
    clip_id: str
    repo_id: str
    fused_score: float
    rerank_score: float | None
    final_score: float
    rank: int

    def to_dict(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "repo_id": self.repo_id,
            "fused_score": self.fused_score,
            "rerank_score": self.rerank_score,
            "final_score": self.final_score,
            "rank": self.rank,
        }


@dataclass
class SearchRecord:
    id: str
    user: str
    text: str
    sources: list[str]
    constraints: dict
    candidate_size: int
    enriched: EnrichedQuery
    results: list[RankedResult] = field(default_factory=list)
    rerank_skipped: bool = False
    deep_job_ids: list[str] = field(default_factory=list)
    created_at: str = field(default_factory=utc_now)

    def to_dict(self) -> dict:
        return {
            "search_id": self.id,
            "user": self.user,
            "query": self.text,
            "sources": list(self.sources),
            "constraints": dict(self.constraints),
            "candidate_size": self.candidate_size,
            "enriched": self.enriched.to_dict(),
            "results": [r.to_dict() for r in self.results],
            "rerank_skipped": self.rerank_skipped,
            "deep_job_ids": list(self.deep_job_ids),
            "created_at": self.created_at,
        }


class RerankerProvider(Protocol):
    version: str

    def score(self, query_text: str, documents: list[str]) -> list[float]: ...


def fuse(scores: dict[str, float], weights: dict[str, float]) -> float:
    """Weighted mean over the dimensions carrying weight."""
    total = sum(weights.values())
    if total <= 0:
        raise ValidationError("fusion weights must sum to a positive value")
    return sum(weights[d] * scores.get(d, 0.0) for d in weights) / total


class SearchEngine:
    def __init__(
        self,
        index: IndexStore,
        embedder: Embedder,
        enricher: VocabularyEnricher,
        reranker: RerankerProvider,
        profiles: ProfileStore,
        config: RetrievalConfig,
    ):
        self.index = index
        self.embedder = embedder
        self.enricher = enricher
        self.reranker = reranker
        self.profiles = profiles
        self.config = config
        self._lock = threading.Lock()

    def enrich(self, query: Query) -> EnrichedQuery:
        if not query.text.strip():
            raise ValidationError("query text must be non-empty")
        return self.enricher.enrich(query.text)

    def retrieve_candidates(
        self, enriched: EnrichedQuery, query: Query, candidate_size: int
    ) -> dict[str, dict]:
        """Per-dimension ANN search over all sources, unioned; absent
        dimensions score 0 for a clip."""
        candidates: dict[str, dict] = {}
        for dimension in enriched.active_dimensions():
            vector = self.embedder.embed(enriched.per_dimension_text[dimension])
            hits = self.index.search_ann(
                vector,
                dimension,
                query.constraints,
                candidate_size,
                query.sources,
            )
            for hit in hits:
                slot = candidates.setdefault(
                    hit.clip_id, {"repo_id": hit.repo_id, "scores": {}}
                )
                slot["scores"][dimension] = hit.score
        return candidates

    def rerank(
        self,
        ranked: list[tuple[str, str, float]],
        enriched: EnrichedQuery,
    ) -> tuple[list[RankedResult], bool]:
        """Re-rank the top window; on provider failure fall back to fused
        order and flag the record."""
        window = min(self.config.rerank_window, len(ranked))
        head, tail = ranked[:window], ranked[window:]
        skipped = False
        rerank_scores: list[float] | None = None
        if head:
            documents = []
            for clip_id, _, _ in head:
                profile = self.profiles.get(clip_id)
                documents.append(profile.text_for("composite") if profile else "")
            try:
                rerank_scores = self.reranker.score(enriched.positive_text(), documents)
                if len(rerank_scores) != len(head):
                    raise ProviderError("reranker returned wrong number of scores")
            except ProviderError:
                skipped = True
                rerank_scores = None
        results: list[RankedResult] = []
        if rerank_scores is not None:
            order = sorted(
                zip(head, rerank_scores),
                key=lambda pair: (-pair[1], pair[0][0]),
            )
            for (clip_id, repo_id, fused_score), score in order:
                results.append(
                    RankedResult(
                        clip_id=clip_id,
                        repo_id=repo_id,
                        fused_score=fused_score,
                        rerank_score=float(score),
                        final_score=float(score),
                        rank=0,
                    )
                )
        else:
            for clip_id, repo_id, fused_score in head:
                results.append(
                    RankedResult(
                        clip_id=clip_id,
                        repo_id=repo_id,
                        fused_score=fused_score,
                        rerank_score=None,
                        final_score=fused_score,
                        rank=0,
                    )
                )
        for clip_id, repo_id, fused_score in tail:
            results.append(
                RankedResult(
                    clip_id=clip_id,
                    repo_id=repo_id,
                    fused_score=fused_score,
                    rerank_score=None,
                    final_score=fused_score,
                    rank=0,
                )
            )
        for position, result in enumerate(results, start=1):
            result.rank = position
        return results, skipped

    def execute(self, query: Query) -> SearchRecord:
        candidate_size = query.candidate_size or self.config.candidate_size_default
        if not 1 <= candidate_size <= self.config.candidate_size_max:
            raise ValidationError(
                f"candidate_size must be in [1, {self.config.candidate_size_max}]"
            )
        enriched = self.enrich(query)
        candidates = self.retrieve_candidates(enriched, query, candidate_size)
        fused = [
            (clip_id, slot["repo_id"], fuse(slot["scores"], enriched.dimension_weights))
            for clip_id, slot in candidates.items()
        ]
        fused.sort(key=lambda item: (-item[2], item[0]))
        fused = fused[:candidate_size]
        results, skipped = self.rerank(fused, enriched)
        return SearchRecord(
            id=f"sr_{uuid.uuid4().hex[:12]}",
            user=query.user,
            text=query.text,
            sources=list(query.sources),
            constraints=query.constraints.to_dict(),
            candidate_size=candidate_size,
            enriched=enriched,
            results=results,
            rerank_skipped=skipped,
        )
