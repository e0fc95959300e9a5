"""Per-repository vector index: five dimension matrices with filterable
metadata, exact cosine search, and a lazily built approximate graph.

Inserts serialize on a per-repository lock and become visible atomically;
searches never observe a half-inserted entry. The approximate path is
only engaged for repositories at least ann_min_repo_size entries large
and falls back to the exact scan whenever the predicate leaves fewer
than overfetch_factor * k candidates.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from ..config import IndexConfig
from ..errors import NotFoundError, ValidationError
from .hnsw import HnswGraph

DIMENSIONS = ("keywords", "style", "content", "viewpoint", "composite")

METADATA_FIELDS = (
    "duration_s",
    "width",
    "height",
    "motion_score",
    "ocr_coverage",
    "aesthetic_a",
    "aesthetic_b",
)


@dataclass
class IndexEntry:
    clip_id: str
    repo_id: str
    vectors: dict[str, np.ndarray]
    metadata: dict[str, float]


@dataclass(frozen=True)
class SearchHit:
    clip_id: str
    repo_id: str
    score: float


@dataclass
class MetadataPredicate:
    duration_range: tuple[float, float] | None = None
    min_width: int | None = None
    min_height: int | None = None
    bounds: dict[str, tuple[float | None, float | None]] = field(default_factory=dict)

    def __post_init__(self):
        if self.duration_range is not None:
            lo, hi = self.duration_range
            if lo > hi:
                raise ValidationError("duration_range must satisfy min <= max")
        for attr, (lo, hi) in self.bounds.items():
            if attr not in METADATA_FIELDS:
                raise ValidationError(f"unknown metadata attribute {attr!r}")
            if lo is not None and hi is not None and lo > hi:
                raise ValidationError(f"bound on {attr} must satisfy min <= max")

    @classmethod
    def from_dict(cls, raw: dict | None) -> "MetadataPredicate":
        if not raw:
            return cls()
        raw = dict(raw)
        duration = raw.pop("duration_range", None)
        min_width = raw.pop("min_width", None)
        min_height = raw.pop("min_height", None)
        bounds = {}
        for attr, rng in raw.items():
            if attr not in METADATA_FIELDS:
                raise ValidationError(f"unknown filter attribute {attr!r}")
            if not isinstance(rng, (list, tuple)) or len(rng) != 2:
                raise ValidationError(f"filter {attr} must be a [min, max] pair")
            bounds[attr] = (rng[0], rng[1])
        return cls(
            duration_range=tuple(duration) if duration else None,
            min_width=min_width,
            min_height=min_height,
            bounds=bounds,
        )

    def is_empty(self) -> bool:
        return (
            self.duration_range is None
            and self.min_width is None
            and self.min_height is None
            and not self.bounds
        )

    def matches(self, metadata: dict[str, float]) -> bool:
        if self.duration_range is not None:
            lo, hi = self.duration_range
            if not lo <= metadata["duration_s"] <= hi:
                return False
        if self.min_width is not None and metadata["width"] < self.min_width:
            return False
        if self.min_height is not None and metadata["height"] < self.min_height:
            return False
        for attr, (lo, hi) in self.bounds.items():
            value = metadata[attr]
            if lo is not None and value < lo:
                return False
            if hi is not None and value > hi:
                return False
        return True

    def mask(self, columns: dict[str, np.ndarray], n: int) -> np.ndarray:
        mask = np.ones(n, dtype=bool)
        if self.duration_range is not None:
            lo, hi = self.duration_range
            d = columns["duration_s"][:n]
            mask &= (d >= lo) & (d <= hi)
        if self.min_width is not None:
            mask &= columns["width"][:n] >= self.min_width
        if self.min_height is not None:
            mask &= columns["height"][:n] >= self.min_height
        for attr, (lo, hi) in self.bounds.items():
            col = columns[attr][:n]
            if lo is not None:
                mask &= col >= lo
            if hi is not None:
                mask &= col <= hi
        return mask

    def to_dict(self) -> dict:
        out: dict = {}
        if self.duration_range is not None:
            out["duration_range"] = list(self.duration_range)
        if self.min_width is not None:
            out["min_width"] = self.min_width
        if self.min_height is not None:
            out["min_height"] = self.min_height
        for attr, (lo, hi) in self.bounds.items():
            out[attr] = [lo, hi]
        return out


class RepositoryIndex:
    def __init__(self, repo_id: str, config: IndexConfig):
        self.repo_id = repo_id
        self.config = config
        self.dim = config.dimension
        self.clip_ids: list[str] = []
        self._row_of: dict[str, int] = {}
        cap = 256
        self._matrices = {
            d: np.zeros((cap, self.dim), dtype=np.float32) for d in DIMENSIONS
        }
        self._columns = {f: np.zeros(cap, dtype=np.float64) for f in METADATA_FIELDS}
        self._graphs: dict[str, HnswGraph] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self.clip_ids)

    def _grow(self, need: int) -> None:
        cap = next(iter(self._matrices.values())).shape[0]
        if need <= cap:
            return
        new_cap = max(need, cap * 2)
        for d in DIMENSIONS:
            m = np.zeros((new_cap, self.dim), dtype=np.float32)
            m[:cap] = self._matrices[d]
            self._matrices[d] = m
        for f in METADATA_FIELDS:
            c = np.zeros(new_cap, dtype=np.float64)
            c[:cap] = self._columns[f]
            self._columns[f] = c

    def _validate(self, entry: IndexEntry) -> None:
        missing = [d for d in DIMENSIONS if d not in entry.vectors]
        if missing:
            raise ValidationError(f"entry missing dimensions: {missing}")
        for d, vec in entry.vectors.items():
            vec = np.asarray(vec)
            if vec.shape != (self.dim,):
                raise ValidationError(
                    f"dimension {d} has shape {vec.shape}, index expects ({self.dim},)"
                )
            norm = float(np.linalg.norm(vec))
            if norm != 0.0 and abs(norm - 1.0) > 1e-6:
                raise ValidationError(f"dimension {d} vector is not unit-norm or zero")
        for f in METADATA_FIELDS:
            value = entry.metadata.get(f)
            if value is None or not math.isfinite(float(value)):
                raise ValidationError(f"metadata field {f} missing or non-finite")

    def insert(self, entry: IndexEntry) -> None:
        """Idempotent on clip_id: re-insert replaces vectors and metadata."""
        self._validate(entry)
        with self._lock:
            row = self._row_of.get(entry.clip_id)
            if row is None:
                row = len(self.clip_ids)
                self._grow(row + 1)
                for d in DIMENSIONS:
                    self._matrices[d][row] = np.asarray(entry.vectors[d], dtype=np.float32)
                for f in METADATA_FIELDS:
                    self._columns[f][row] = float(entry.metadata[f])
                for d, graph in self._graphs.items():
                    graph.add(self._matrices[d][row])
                # commit point: the entry becomes searchable here
                self._row_of[entry.clip_id] = row
                self.clip_ids.append(entry.clip_id)
            else:
                for d in DIMENSIONS:
                    self._matrices[d][row] = np.asarray(entry.vectors[d], dtype=np.float32)
                    graph = self._graphs.get(d)
                    if graph is not None:
                        # replace in place; existing graph edges stay valid
                        graph._matrix[row] = self._matrices[d][row]
                for f in METADATA_FIELDS:
                    self._columns[f][row] = float(entry.metadata[f])

    def metadata_of(self, clip_id: str) -> dict[str, float]:
        with self._lock:
            row = self._row_of[clip_id]
            return {f: float(self._columns[f][row]) for f in METADATA_FIELDS}

    def _graph_for(self, dimension: str) -> HnswGraph:
        graph = self._graphs.get(dimension)
        if graph is None:
            graph = HnswGraph(
                dim=self.dim,
                m=self.config.m,
                ef_construction=self.config.ef_construction,
                seed=self.config.seed + (hash(dimension) & 0xFFFF),
            )
            for row in range(len(self.clip_ids)):
                graph.add(self._matrices[dimension][row])
            self._graphs[dimension] = graph
        return graph

    def search_exact(
        self,
        query: np.ndarray,
        dimension: str,
        predicate: MetadataPredicate,
        k: int,
    ) -> list[SearchHit]:
        if dimension not in DIMENSIONS:
            raise ValidationError(f"unknown dimension {dimension!r}")
        if k < 1:
            raise ValidationError("k must be >= 1")
        query = np.asarray(query, dtype=np.float32)
        if query.shape != (self.dim,):
            raise ValidationError(f"query must have dimension {self.dim}")
        if float(np.linalg.norm(query)) == 0.0:
            return []
        with self._lock:
            n = len(self.clip_ids)
            if n == 0:
                return []
            scores = self._matrices[dimension][:n] @ query
            mask = predicate.mask(self._columns, n)
            rows = np.nonzero(mask)[0]
            hits = [
                (float(scores[r]), self.clip_ids[r]) for r in rows
            ]
        hits.sort(key=lambda h: (-h[0], h[1]))
        return [SearchHit(clip_id=c, repo_id=self.repo_id, score=s) for s, c in hits[:k]]

    def search_ann(
        self,
        query: np.ndarray,
        dimension: str,
        predicate: MetadataPredicate,
        k: int,
        ef_search: int | None = None,
    ) -> list[SearchHit]:
        if dimension not in DIMENSIONS:
            raise ValidationError(f"unknown dimension {dimension!r}")
        if k < 1:
            raise ValidationError("k must be >= 1")
        query = np.asarray(query, dtype=np.float32)
        if query.shape != (self.dim,):
            raise ValidationError(f"query must have dimension {self.dim}")
        if float(np.linalg.norm(query)) == 0.0:
            return []
        ef = ef_search if ef_search is not None else self.config.ef_search
        fetch = self.config.overfetch_factor * k
        with self._lock:
            n = len(self.clip_ids)
            if n < self.config.ann_min_repo_size:
                return self.search_exact(query, dimension, predicate, k)
            candidates = int(predicate.mask(self._columns, n).sum())
            if candidates < fetch:
                return self.search_exact(query, dimension, predicate, k)
            graph = self._graph_for(dimension)
            raw = graph.search(query, fetch, max(ef, fetch))
            hits = []
            for score, row in raw:
                meta = {f: float(self._columns[f][row]) for f in METADATA_FIELDS}
                if predicate.matches(meta):
                    hits.append((score, self.clip_ids[row]))
        hits.sort(key=lambda h: (-h[0], h[1]))
        return [SearchHit(clip_id=c, repo_id=self.repo_id, score=s) for s, c in hits[:k]]


class IndexStore:
    """All repository indexes plus cross-repository search merging."""

    def __init__(self, config: IndexConfig):
        self.config = config
        self._repos: dict[str, RepositoryIndex] = {}
        self._lock = threading.Lock()

    def repo(self, repo_id: str, create: bool = False) -> RepositoryIndex:
        with self._lock:
            index = self._repos.get(repo_id)
            if index is None:
                if not create:
                    raise NotFoundError(f"unknown repository index: {repo_id}")
                index = RepositoryIndex(repo_id, self.config)
                self._repos[repo_id] = index
            return index

    def repo_ids(self) -> list[str]:
        with self._lock:
            return list(self._repos)

    def insert(self, entry: IndexEntry) -> None:
        self.repo(entry.repo_id, create=True).insert(entry)

    def delete_repo(self, repo_id: str) -> int:
        with self._lock:
            index = self._repos.pop(repo_id, None)
        if index is None:
            raise NotFoundError(f"unknown repository index: {repo_id}")
        return len(index)

    def _merged(self, per_repo: list[list[SearchHit]], k: int) -> list[SearchHit]:
        merged = [hit for hits in per_repo for hit in hits]
        merged.sort(key=lambda h: (-h.score, h.clip_id))
        return merged[:k]

    def search_exact(self, query, dimension, predicate, k, repos) -> list[SearchHit]:
        return self._merged(
            [self.repo(r).search_exact(query, dimension, predicate, k) for r in repos], k
        )

    def search_ann(self, query, dimension, predicate, k, repos, ef_search=None) -> list[SearchHit]:
        return self._merged(
            [
                self.repo(r).search_ann(query, dimension, predicate, k, ef_search)
                for r in repos
            ],
            k,
        )
