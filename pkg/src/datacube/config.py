"""Platform configuration.

Loaded from a TOML document with sections [storage], [index], [policy],
[providers], [scheduler] and [auth]; the DATACUBE_CONFIG environment
variable points at the file. Every field has a default so an empty file
(or no file) yields a working desk-scale platform.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_TRACKING_PARAMS = (
    "utm_source",
    "utm_medium",
    "utm_campaign",
    "utm_term",
    "utm_content",
)

DEFAULT_VIEWPOINT_VOCAB = (
    "aerial",
    "close-up",
    "pov",
    "overhead",
    "wide-angle",
    "first-person",
    "drone",
    "handheld",
)

DEFAULT_STYLE_VOCAB = (
    "cartoon",
    "cinematic",
    "noir",
    "documentary",
    "vintage",
    "animated",
    "timelapse",
    "slow-motion",
)


@dataclass
class FilterPolicy:
    """Segmentation and quality-gate thresholds (section [policy])."""

    scene_threshold: float = 26.0
    min_clip_duration_s: float = 5.0
    min_motion_score: float = 10.0
    motion_sample_interval_s: float = 0.5
    max_ocr_coverage: float | None = None
    max_aesthetic_a: float | None = None  # NIQE-like, lower is better
    min_aesthetic_b: float | None = None  # MUSIQ-like, higher is better
    dedup_hamming_max: int = 5
    fingerprint_interval_s: float = 1.0
    fingerprint_min_samples: int = 3
    tracking_params: tuple[str, ...] = DEFAULT_TRACKING_PARAMS

    def __post_init__(self):
        if self.min_clip_duration_s <= 0:
            raise ValueError("min_clip_duration_s must be positive")
        if self.motion_sample_interval_s <= 0:
            raise ValueError("motion_sample_interval_s must be positive")
        if self.scene_threshold <= 0:
            raise ValueError("scene_threshold must be positive")


@dataclass
class IndexConfig:
    """Vector index parameters (section [index])."""

    dimension: int = 1024
    m: int = 16
    ef_construction: int = 200
    # Default chosen so the approximate path holds recall@10 >= 0.95 on
    # 10k random unit vectors at the default dimension.
    ef_search: int = 1536
    ann_min_repo_size: int = 10_000
    overfetch_factor: int = 4
    seed: int = 0


@dataclass
class RetrievalConfig:
    """Query pipeline defaults and caps (section [policy], retrieval keys)."""

    candidate_size_default: int = 10_000
    candidate_size_max: int = 100_000
    rerank_window: int = 1_000
    deep_scope_default: int = 500
    deep_scope_max: int = 10_000
    export_cap: int = 10_000
    page_size_default: int = 50
    sample_count: int = 8
    blocklist: tuple[str, ...] = ()
    viewpoint_vocab: tuple[str, ...] = DEFAULT_VIEWPOINT_VOCAB
    style_vocab: tuple[str, ...] = DEFAULT_STYLE_VOCAB


@dataclass
class SchedulerConfig:
    """Resource pool sizes and retry policy (section [scheduler])."""

    cpu_capacity: int = field(default_factory=lambda: os.cpu_count() or 1)
    gpu_capacity: int = 1
    provider_retries: int = 2


@dataclass
class ProviderConfig:
    """Provider selection knobs (section [providers])."""

    matcher_latency_s: float = 0.0
    deep_parallelism: int = 1


@dataclass
class AuthConfig:
    """Static bearer-token map (section [auth])."""

    tokens: dict[str, str] = field(default_factory=lambda: {"local-admin": "admin"})


@dataclass
class PlatformConfig:
    data_root: Path = field(default_factory=lambda: Path("datacube-data"))
    policy: FilterPolicy = field(default_factory=FilterPolicy)
    index: IndexConfig = field(default_factory=IndexConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    providers: ProviderConfig = field(default_factory=ProviderConfig)
    auth: AuthConfig = field(default_factory=AuthConfig)

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "PlatformConfig":
        cfg = cls()
        storage = raw.get("storage", {})
        if "root" in storage:
            cfg.data_root = Path(storage["root"])
        cfg.index = _fill(IndexConfig, raw.get("index", {}))
        policy_raw = dict(raw.get("policy", {}))
        retrieval_keys = {f.name for f in fields(RetrievalConfig)}
        retrieval_raw = {k: policy_raw.pop(k) for k in list(policy_raw) if k in retrieval_keys}
        cfg.policy = _fill(FilterPolicy, policy_raw)
        cfg.retrieval = _fill(RetrievalConfig, retrieval_raw)
        cfg.scheduler = _fill(SchedulerConfig, raw.get("scheduler", {}))
        cfg.providers = _fill(ProviderConfig, raw.get("providers", {}))
        auth = raw.get("auth", {})
        if "tokens" in auth:
            cfg.auth = AuthConfig(tokens=dict(auth["tokens"]))
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "PlatformConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    @classmethod
    def from_env(cls) -> "PlatformConfig":
        path = os.environ.get("DATACUBE_CONFIG")
        if path:
            return cls.from_file(path)
        return cls()


def _fill(klass, raw: dict[str, Any]):
    names = {f.name for f in fields(klass)}
    unknown = set(raw) - names
    if unknown:
        raise ValueError(f"unknown {klass.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return klass(**kwargs)
