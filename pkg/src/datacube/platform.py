"""Platform assembly: wires storage, registries, providers, the index,
the scheduler and the retrieval engine into one object, and orchestrates
the per-video ingest chain SEGMENT -> ANALYZE -> PROFILE -> EMBED ->
INDEX with URL dedup before segmentation and fingerprint dedup after.

State is desk-scale persistent: append-only JSONL logs plus the object
store and per-repository index segments, all reloaded on boot, so a
restarted platform (or a fresh CLI process on the same data root) sees
prior repositories, clips, searches, jobs and exports.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field

from .clips import ClipStore
from .config import PlatformConfig
from .embed import HashingEmbedder
from .errors import (
    ArchivedError,
    ConflictError,
    ForbiddenError,
    NotFoundError,
    ProviderError,
    ValidationError,
)
from .frames import SyntheticFrameStream, VideoDescriptor
from .index import DIMENSIONS, IndexEntry, IndexStore, MetadataPredicate
from .index.segments import load_repo, save_repo
from .ingest import (
    AnalyzerSet,
    DedupRegistry,
    FrameDiffMotionAnalyzer,
    analyze,
    clip_fingerprint,
    discard_short,
    quality_gate,
    segment,
)
from .models import ClipStatus, RawVideo
from .profiles import ProfileStore, build_profile, compliance_filter, plan_samples
from .providers import (
    DescriptorAestheticAnalyzer,
    DescriptorCatalog,
    DescriptorOcrAnalyzer,
    DescriptorProfiler,
    JaccardMatcher,
    JaccardReranker,
)
from .retrieval import DeepJobManager, Query, SearchEngine, SearchRecord, VocabularyEnricher
from .retrieval.search import utc_now
from .scheduler import Scheduler, Task, TaskKind
from .sessions import SessionStore
from .statelog import JsonlLog
from .storage import ObjectStore, RepositoryRegistry, RepoStatus, Visibility
from .storage.exports import new_download_token, package_export

RAW_BUCKET = "raw"
CLIP_BUCKET = "clips"
EXPORT_BUCKET = "exports"


@dataclass
class VideoRecord:
    video: RawVideo
    repo_id: str
    descriptor: VideoDescriptor


@dataclass
class ExportRecord:
    id: str
    user: str
    status: str = "PENDING"  # PENDING | RUNNING | COMPLETED | FAILED
    link: str | None = None
    token: str | None = None
    row_count: int | None = None
    error: str | None = None
    created_at: str = field(default_factory=utc_now)
    source: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "export_id": self.id,
            "user": self.user,
            "status": self.status,
            "link": self.link,
            "token": self.token,
            "row_count": self.row_count,
            "error": self.error,
            "created_at": self.created_at,
            "source": dict(self.source),
        }


class Platform:
    def __init__(self, config: PlatformConfig | None = None):
        self.config = config or PlatformConfig()
        root = self.config.data_root
        root.mkdir(parents=True, exist_ok=True)
        self.objects = ObjectStore(root / "objects")
        self.repos = RepositoryRegistry()
        self.clips = ClipStore()
        self.catalog = DescriptorCatalog()
        self.profiles = ProfileStore()
        self.index = IndexStore(self.config.index)
        self.sessions = SessionStore()
        self.scheduler = Scheduler(self.config.scheduler)

        self.analyzers = AnalyzerSet(
            motion=FrameDiffMotionAnalyzer(),
            ocr=DescriptorOcrAnalyzer(self.catalog),
            aesthetic=DescriptorAestheticAnalyzer(self.catalog),
        )
        self.profiler = DescriptorProfiler(self.catalog)
        self.embedder = HashingEmbedder(self.config.index.dimension)
        self.enricher = VocabularyEnricher(
            viewpoint_vocab=self.config.retrieval.viewpoint_vocab,
            style_vocab=self.config.retrieval.style_vocab,
        )
        self.reranker = JaccardReranker()
        self.matcher = JaccardMatcher(latency_s=self.config.providers.matcher_latency_s)

        self.engine = SearchEngine(
            index=self.index,
            embedder=self.embedder,
            enricher=self.enricher,
            reranker=self.reranker,
            profiles=self.profiles,
            config=self.config.retrieval,
        )
        self._searches: dict[str, SearchRecord] = {}
        self._videos: dict[str, VideoRecord] = {}
        self._exports: dict[str, ExportRecord] = {}
        self._download_tokens: dict[str, str] = {}  # token -> export_id
        self._dedup: dict[str, DedupRegistry] = {}
        self._lock = threading.RLock()

        logs = root / "records"
        self._repo_log = JsonlLog(logs / "repos.jsonl")
        self._video_log = JsonlLog(logs / "videos.jsonl")
        self._clip_log = JsonlLog(logs / "clips.jsonl")
        self._profile_log = JsonlLog(logs / "profiles.jsonl")
        self._search_log = JsonlLog(logs / "searches.jsonl")
        self._job_log = JsonlLog(logs / "jobs.jsonl")
        self._export_log = JsonlLog(logs / "exports.jsonl")

        self.jobs = DeepJobManager(
            scheduler=self.scheduler,
            matcher=self.matcher,
            profile_lookup=self.profiles.get,
            search_lookup=self._search_record,
            config=self.config.retrieval,
            on_update=lambda job: self._job_log.append(job.snapshot()),
        )
        self._restore()

    # -- persistence --------------------------------------------------------

    def _restore(self) -> None:
        self.repos.restore(self._repo_log.load_latest("repo_id"))
        for row in self._video_log.load_latest("video_id"):
            descriptor = VideoDescriptor.from_dict(row["descriptor"])
            video = RawVideo(
                id=row["video_id"],
                duration_s=descriptor.duration_s,
                width=descriptor.width,
                height=descriptor.height,
                fps=descriptor.fps,
                source_url=descriptor.source_url,
            )
            if self.objects.exists(RAW_BUCKET, row["object_key"]):
                video.object_ref = self.objects.ref(RAW_BUCKET, row["object_key"])
            elif self.objects.exists("cold/" + RAW_BUCKET, row["object_key"]):
                video.object_ref = self.objects.ref("cold/" + RAW_BUCKET, row["object_key"])
            record = VideoRecord(video=video, repo_id=row["repo_id"], descriptor=descriptor)
            self._videos[video.id] = record
            self.catalog.register(video.id, descriptor)
            if descriptor.source_url:
                self._dedup_for(row["repo_id"]).register_url(
                    descriptor.source_url, video.id, self.config.policy.tracking_params
                )
        for row in self._clip_log.load_latest("clip_id"):
            self.clips.restore_record(row)
            clip = self.clips.get(row["clip_id"])
            is_dup = clip.status is ClipStatus.REJECTED and clip.reject_reason == "duplicate"
            if clip.fingerprint and not is_dup:
                self._dedup_for(row["repo_id"]).register_fingerprint(
                    clip.fingerprint, clip.id
                )
        for row in self._profile_log.load_latest("clip_id"):
            self.profiles.load_record(row)
        for repo in self.repos.snapshot():
            repo_dir = self.config.data_root / "index" / repo["repo_id"]
            if (repo_dir / "metadata.jsonl").is_file():
                loaded = load_repo(repo["repo_id"], repo_dir, self.config.index)
                with self.index._lock:
                    self.index._repos[repo["repo_id"]] = loaded
            counts = self.clips.counts(repo["repo_id"])
            self.repos.get(repo["repo_id"]).clip_count = counts["indexed"]
        for row in sorted(
            self._search_log.load_latest("search_id"), key=lambda r: r["created_at"]
        ):
            record = _search_from_dict(row)
            self._searches[record.id] = record
            self.sessions.append(record.user, _session_summary(record))
        for row in self._job_log.load_latest("job_id"):
            self.jobs.restore(row)
        for row in self._export_log.load_latest("export_id"):
            record = ExportRecord(
                id=row["export_id"],
                user=row["user"],
                status="FAILED" if row["status"] in ("PENDING", "RUNNING") else row["status"],
                link=row.get("link"),
                token=row.get("token"),
                row_count=row.get("row_count"),
                error=row.get("error"),
                created_at=row.get("created_at", utc_now()),
                source=dict(row.get("source", {})),
            )
            self._exports[record.id] = record
            if record.token:
                self._download_tokens[record.token] = record.id

    def _persist_repo(self, repo_id: str) -> None:
        self._repo_log.append(self.repos.get(repo_id).to_dict())

    def _persist_clip(self, clip_id: str) -> None:
        clip = self.clips.get(clip_id)
        self._clip_log.append(self.clips.snapshot_record(clip, self.clips.repo_of(clip_id)))

    def _persist_search(self, record: SearchRecord) -> None:
        self._search_log.append(record.to_dict())

    # -- repositories -------------------------------------------------------

    def create_repository(self, user: str, name: str, visibility: str) -> dict:
        try:
            vis = Visibility(visibility.upper())
        except ValueError:
            raise ValidationError(f"visibility must be private or shared, got {visibility!r}")
        repo = self.repos.create(name, user, vis)
        self._persist_repo(repo.id)
        return repo.to_dict()

    def list_repositories(self, user: str, visibility: str | None = None) -> list[dict]:
        out = []
        for repo in self.repos.listing(user, visibility):
            row = repo.to_dict()
            row["clip_count"] = self.clips.counts(repo.id)["indexed"]
            out.append(row)
        return out

    def repository_detail(self, user: str, repo_id: str) -> dict:
        repo = self.repos.get(repo_id)
        if not repo.visible_to(user):
            raise ForbiddenError(f"repository {repo_id} is not visible to {user}")
        counts = self.clips.counts(repo.id)
        row = repo.to_dict()
        row["clip_count"] = counts["indexed"]
        rejected = dict(repo.rejected)
        for reason, count in counts["rejected"].items():
            rejected[reason] = rejected.get(reason, 0) + count
        row["rejected"] = rejected
        row["pending_tasks"] = self.repos.pending_tasks(repo.id)
        return row

    def _dedup_for(self, repo_id: str) -> DedupRegistry:
        with self._lock:
            registry = self._dedup.get(repo_id)
            if registry is None:
                registry = DedupRegistry(self.config.policy.dedup_hamming_max)
                self._dedup[repo_id] = registry
            return registry

    # -- ingest pipeline ----------------------------------------------------

    def ingest(self, user: str, repo_id: str, descriptors: list[dict]) -> dict:
        repo = self.repos.get(repo_id)
        if repo.owner != user:
            raise ForbiddenError(f"only the owner may upload to repository {repo.name!r}")
        if not descriptors:
            raise ValidationError("upload payload must contain at least one video")
        parsed = [VideoDescriptor.from_dict(d) for d in descriptors]
        registry = self._dedup_for(repo_id)
        task_ids = []
        duplicates = []
        for descriptor in parsed:
            video_id = f"vd_{uuid.uuid4().hex[:12]}"
            if descriptor.source_url:
                _, existing = registry.register_url(
                    descriptor.source_url, video_id, self.config.policy.tracking_params
                )
                if existing is not None:
                    duplicates.append(descriptor.source_url)
                    repo.duplicate_urls.append(descriptor.source_url)
                    continue
            video = RawVideo(
                id=video_id,
                duration_s=descriptor.duration_s,
                width=descriptor.width,
                height=descriptor.height,
                fps=descriptor.fps,
                source_url=descriptor.source_url,
            )
            raw_key = f"{repo_id}/{video_id}.json"
            video.object_ref = self.objects.put(
                RAW_BUCKET, raw_key, descriptor.to_json().encode("utf-8")
            )
            record = VideoRecord(video=video, repo_id=repo_id, descriptor=descriptor)
            with self._lock:
                self._videos[video_id] = record
            self.catalog.register(video_id, descriptor)
            repo.video_count += 1
            self._video_log.append(
                {
                    "video_id": video_id,
                    "repo_id": repo_id,
                    "object_key": raw_key,
                    "descriptor": descriptor.to_dict(),
                }
            )
            ticket = self._submit_stage(
                repo_id, TaskKind.SEGMENT, lambda vid=video_id: self._task_segment(vid)
            )
            task_ids.append(ticket.task.id)
        self._persist_repo(repo_id)
        return {"ingest_task_ids": task_ids, "duplicates": duplicates}

    def _submit_stage(self, repo_id: str, kind: TaskKind, fn):
        self.repos.task_started(repo_id)
        try:
            return self.scheduler.submit(
                Task(kind=kind, fn=fn),
                on_done=lambda ticket: self._stage_done(repo_id),
            )
        except BaseException:
            self.repos.task_finished(repo_id)
            raise

    def _stage_done(self, repo_id: str) -> None:
        self.repos.task_finished(repo_id)
        repo = self.repos.get(repo_id)
        if repo.status is RepoStatus.READY:
            repo.clip_count = self.clips.counts(repo_id)["indexed"]
            index_dir = self.config.data_root / "index" / repo_id
            try:
                with self.index._lock:
                    repo_index = self.index._repos.get(repo_id)
                if repo_index is not None:
                    save_repo(repo_index, index_dir)
            except Exception:  # noqa: BLE001 - persistence failures stay non-fatal
                pass
            self._persist_repo(repo_id)

    def _stream_for_video(self, video_id: str) -> SyntheticFrameStream:
        return SyntheticFrameStream(self.catalog.get(video_id))

    def _task_segment(self, video_id: str) -> None:
        with self._lock:
            record = self._videos[video_id]
        repo_id = record.repo_id
        policy = self.config.policy
        stream = self._stream_for_video(video_id)
        boundaries = segment(stream, policy)
        clips = discard_short(
            boundaries,
            stream.fps,
            policy,
            parent_video=video_id,
            width=record.descriptor.width,
            height=record.descriptor.height,
        )
        short_count = len(boundaries) - len(clips)
        if short_count:
            self.repos.record_rejection(repo_id, "short", short_count)
        registry = self._dedup_for(repo_id)
        for clip in clips:
            clip.fingerprint = clip_fingerprint(
                stream,
                clip.start_frame,
                clip.end_frame,
                policy.fingerprint_interval_s,
                policy.fingerprint_min_samples,
            )
            media = json.dumps(
                {
                    "clip_id": clip.id,
                    "parent_video": video_id,
                    "start_s": clip.start_s,
                    "end_s": clip.end_s,
                    "width": clip.width,
                    "height": clip.height,
                    "fingerprint": [f"{h:016x}" for h in clip.fingerprint],
                },
                sort_keys=True,
            ).encode("utf-8")
            clip.object_ref = self.objects.put(CLIP_BUCKET, f"{repo_id}/{clip.id}.json", media)
            self.clips.add(clip, repo_id)
            existing = registry.register_fingerprint(clip.fingerprint, clip.id)
            if existing is not None:
                clip.advance(ClipStatus.REJECTED, reason="duplicate")
                self._persist_clip(clip.id)
                continue
            self._persist_clip(clip.id)
            self._submit_stage(
                repo_id, TaskKind.ANALYZE, lambda cid=clip.id: self._task_analyze(cid)
            )
        if record.video.object_ref is not None:
            record.video.object_ref = self.objects.move_cold(record.video.object_ref)
        self._persist_repo(repo_id)

    def _task_analyze(self, clip_id: str) -> None:
        clip = self.clips.get(clip_id)
        repo_id = self.clips.repo_of(clip_id)
        stream = self._stream_for_video(clip.parent_video)
        try:
            analyze(clip, stream, self.analyzers, self.config.policy)
        except ProviderError as exc:
            clip.error = f"analysis failed: {exc.message}"
            self._persist_clip(clip_id)
            raise
        clip.error = None
        decision = quality_gate(clip, self.config.policy)
        self._persist_clip(clip_id)
        if decision.accepted:
            self._submit_stage(
                repo_id, TaskKind.PROFILE, lambda cid=clip_id: self._task_profile(cid)
            )

    def _task_profile(self, clip_id: str) -> None:
        clip = self.clips.get(clip_id)
        repo_id = self.clips.repo_of(clip_id)
        stream = self._stream_for_video(clip.parent_video)
        plan = plan_samples(
            clip.end_frame - clip.start_frame, self.config.retrieval.sample_count
        )
        try:
            profile = build_profile(clip, plan, self.profiler, stream)
        except ProviderError as exc:
            clip.error = f"profiling failed: {exc.message}"
            self._persist_clip(clip_id)
            raise
        except ValidationError as exc:
            clip.error = f"profiler output invalid: {exc.message}"
            self._persist_clip(clip_id)
            raise
        verdict = compliance_filter(profile, self.config.retrieval.blocklist)
        if not verdict.compliant:
            clip.advance(ClipStatus.REJECTED, reason="compliance")
            self._persist_clip(clip_id)
            return
        clip.error = None
        self.profiles.upsert(profile)
        self._profile_log.append(profile.to_json_dict())
        self._persist_clip(clip_id)
        self._submit_stage(repo_id, TaskKind.EMBED, lambda cid=clip_id: self._task_embed(cid))

    def _task_embed(self, clip_id: str) -> None:
        clip = self.clips.get(clip_id)
        repo_id = self.clips.repo_of(clip_id)
        profile = self.profiles.get(clip_id)
        if profile is None:
            raise ValidationError(f"clip {clip_id} has no profile to embed")
        vectors = {
            dim: self.embedder.embed(profile.text_for(dim)) for dim in DIMENSIONS
        }
        quality = clip.quality
        entry = IndexEntry(
            clip_id=clip_id,
            repo_id=repo_id,
            vectors=vectors,
            metadata={
                "duration_s": clip.duration_s,
                "width": clip.width,
                "height": clip.height,
                "motion_score": quality.motion_score if quality else 0.0,
                "ocr_coverage": quality.ocr_coverage if quality else 0.0,
                "aesthetic_a": quality.aesthetic_a if quality else 0.0,
                "aesthetic_b": quality.aesthetic_b if quality else 0.0,
            },
        )
        self._submit_stage(
            repo_id, TaskKind.INDEX, lambda e=entry: self._task_index(e)
        )

    def _task_index(self, entry: IndexEntry) -> None:
        self.index.insert(entry)
        clip = self.clips.get(entry.clip_id)
        clip.advance(ClipStatus.INDEXED)
        self._persist_clip(entry.clip_id)

    def wait_ready(self, repo_id: str, timeout: float = 60.0) -> bool:
        """Test/CLI helper: block until the repo's pipeline settles."""
        import time

        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if (
                self.repos.pending_tasks(repo_id) == 0
                and self.repos.get(repo_id).status is not RepoStatus.INGESTING
            ):
                return True
            time.sleep(0.02)
        return False

    # -- search -------------------------------------------------------------

    def _check_sources(self, user: str, sources: list[str]) -> None:
        if not sources:
            raise ValidationError("search needs at least one source repository")
        for repo_id in sources:
            repo = self.repos.get(repo_id)  # NotFoundError for unknown
            if not repo.visible_to(user):
                raise ForbiddenError(f"repository {repo_id} is not visible to {user}")
            self.repos.require_ready(repo_id)

    def search(
        self,
        user: str,
        text: str,
        sources: list[str],
        filters: dict | None = None,
        candidate_size: int | None = None,
        page: int = 1,
        page_size: int | None = None,
        deep: bool = False,
        scope: int | None = None,
    ) -> dict:
        if not text or not text.strip():
            raise ValidationError("query text must be non-empty")
        self._check_sources(user, sources)
        if candidate_size is not None and not (
            1 <= candidate_size <= self.config.retrieval.candidate_size_max
        ):
            raise ValidationError(
                f"candidate_size must be in [1, {self.config.retrieval.candidate_size_max}]"
            )
        predicate = MetadataPredicate.from_dict(filters)
        query = Query(
            text=text,
            sources=sources,
            user=user,
            constraints=predicate,
            candidate_size=candidate_size,
        )
        record = self.engine.execute(query)
        with self._lock:
            self._searches[record.id] = record
        self.sessions.append(user, _session_summary(record))
        self._persist_search(record)
        response = self._search_response(record, page, page_size)
        if deep:
            job = self.start_deep_job(user, record.id, scope)
            response["deep_job_id"] = job["job_id"]
        return response

    def _search_response(self, record: SearchRecord, page: int, page_size: int | None) -> dict:
        size = page_size or self.config.retrieval.page_size_default
        if page < 1 or size < 1 or size > 500:
            raise ValidationError("page must be >= 1 and page_size in [1, 500]")
        start = (page - 1) * size
        rows = [
            {
                "rank": r.rank,
                "clip_id": r.clip_id,
                "repo_id": r.repo_id,
                "relevance": round(r.final_score, 3),
                "fused_score": r.fused_score,
                "rerank_score": r.rerank_score,
            }
            for r in record.results[start : start + size]
        ]
        return {
            "search_id": record.id,
            "query": record.text,
            "sources": list(record.sources),
            "total_results": len(record.results),
            "page": page,
            "page_size": size,
            "rerank_skipped": record.rerank_skipped,
            "results": rows,
            "created_at": record.created_at,
        }

    def search_page(self, user: str, search_id: str, page: int, page_size: int | None) -> dict:
        record = self._search_record(search_id)
        if record.user != user:
            raise ForbiddenError("search records are private to their owner")
        return self._search_response(record, page, page_size)

    def _search_record(self, search_id: str) -> SearchRecord:
        with self._lock:
            record = self._searches.get(search_id)
        if record is None:
            raise NotFoundError(f"unknown search: {search_id}")
        return record

    def session(self, user: str) -> dict:
        return {"user": user, "records": self.sessions.records_for(user)}

    # -- deep jobs ----------------------------------------------------------

    def start_deep_job(self, user: str, search_id: str, scope: int | None = None) -> dict:
        record = self._search_record(search_id)
        if record.user != user:
            raise ForbiddenError("search records are private to their owner")
        job = self.jobs.start(search_id, scope, user=user)
        record.deep_job_ids.append(job.id)
        self.sessions.attach_deep_job(user, search_id, job.id)
        self._persist_search(record)
        return self.jobs.status(job.id)

    def job_status(self, user: str, job_id: str) -> dict:
        job = self.jobs.get(job_id)
        if job.user != user:
            raise ForbiddenError("jobs are private to their owner")
        return self.jobs.status(job_id)

    def list_jobs(self, user: str) -> list[dict]:
        return self.jobs.list_for(user)

    def cancel_job(self, user: str, job_id: str) -> dict:
        job = self.jobs.get(job_id)
        if job.user != user:
            raise ForbiddenError("jobs are private to their owner")
        return self.jobs.cancel(job_id)

    # -- exports ------------------------------------------------------------

    def start_export(
        self,
        user: str,
        search_id: str | None = None,
        clip_ids: list[str] | None = None,
        limit: int | None = None,
    ) -> dict:
        cap = self.config.retrieval.export_cap
        if limit is not None and not 1 <= limit <= cap:
            raise ValidationError(
                f"export limit must be in [1, {cap}]", {"cap": cap, "limit": limit}
            )
        selection = self._resolve_selection(user, search_id, clip_ids, limit, cap)
        export = ExportRecord(
            id=f"ex_{uuid.uuid4().hex[:12]}",
            user=user,
            source={"search_id": search_id, "clip_ids": clip_ids, "limit": limit},
        )
        with self._lock:
            self._exports[export.id] = export
        self._export_log.append(export.to_dict())
        self.scheduler.submit(
            Task(kind=TaskKind.EXPORT, fn=lambda: self._task_export(export.id, selection))
        )
        return export.to_dict()

    def _resolve_selection(
        self,
        user: str,
        search_id: str | None,
        clip_ids: list[str] | None,
        limit: int | None,
        cap: int,
    ) -> list[tuple[str, float]]:
        if search_id:
            record = self._search_record(search_id)
            if record.user != user:
                raise ForbiddenError("search records are private to their owner")
            pool = [(r.clip_id, round(r.final_score, 3)) for r in record.results]
            if clip_ids:
                wanted = set(clip_ids)
                missing = wanted - {cid for cid, _ in pool}
                if missing:
                    raise ValidationError(
                        f"clips not part of search {search_id}: {sorted(missing)[:10]}"
                    )
                pool = [(cid, rel) for cid, rel in pool if cid in wanted]
        elif clip_ids:
            for clip_id in clip_ids:
                clip = self.clips.get(clip_id)
                repo = self.repos.get(self.clips.repo_of(clip_id))
                if not repo.visible_to(user):
                    raise ForbiddenError(f"clip {clip_id} is not visible to {user}")
                if clip.status is not ClipStatus.INDEXED:
                    raise ValidationError(f"clip {clip_id} is not INDEXED")
            pool = [(cid, 0.0) for cid in clip_ids]
        else:
            raise ValidationError("export needs a search_id or clip_ids")
        if limit is not None:
            pool = pool[:limit]
        if not pool:
            raise ValidationError("export selection is empty")
        if len(pool) > cap:
            raise ValidationError(
                f"export selection exceeds the cap of {cap} clips",
                {"cap": cap, "requested": len(pool)},
            )
        return pool

    def _manifest_row(self, clip_id: str) -> dict | None:
        clip = self.clips.maybe(clip_id)
        if clip is None or clip.status is not ClipStatus.INDEXED:
            return None
        profile = self.profiles.get(clip_id)
        quality = clip.quality
        return {
            "clip_id": clip_id,
            "source_repo": self.clips.repo_of(clip_id),
            "uri": f"clips/{clip_id}",
            "duration_s": clip.duration_s,
            "width": clip.width,
            "height": clip.height,
            "motion_score": quality.motion_score if quality else 0.0,
            "ocr_coverage": quality.ocr_coverage if quality else 0.0,
            "aesthetic_a": quality.aesthetic_a if quality else 0.0,
            "aesthetic_b": quality.aesthetic_b if quality else 0.0,
            "profile": profile.to_json_dict() if profile else None,
        }

    def _clip_media(self, clip_id: str) -> bytes:
        clip = self.clips.get(clip_id)
        if clip.object_ref is None:
            raise NotFoundError(f"clip {clip_id} has no stored media")
        return self.objects.get(clip.object_ref.bucket, clip.object_ref.key)

    def _task_export(self, export_id: str, selection: list[tuple[str, float]]) -> None:
        with self._lock:
            export = self._exports[export_id]
            export.status = "RUNNING"
        try:
            manifest, archive = package_export(
                export_id,
                selection,
                self._manifest_row,
                self._clip_media,
                cap=self.config.retrieval.export_cap,
            )
            key = f"{export_id}.zip"
            self.objects.put(EXPORT_BUCKET, key, archive)
            token = new_download_token()
            with self._lock:
                export.token = token
                export.link = f"/v1/downloads/{token}"
                export.row_count = manifest.row_count
                export.status = "COMPLETED"
                self._download_tokens[token] = export_id
        except Exception as exc:  # noqa: BLE001 - export failures are recorded
            with self._lock:
                export.status = "FAILED"
                export.error = f"{type(exc).__name__}: {exc}"
            self._export_log.append(export.to_dict())
            raise
        self._export_log.append(export.to_dict())

    def export_status(self, user: str, export_id: str) -> dict:
        with self._lock:
            export = self._exports.get(export_id)
        if export is None:
            raise NotFoundError(f"unknown export: {export_id}")
        if export.user != user:
            raise ForbiddenError("exports are private to their owner")
        return export.to_dict()

    def download(self, token: str) -> tuple[bytes, str]:
        with self._lock:
            export_id = self._download_tokens.get(token)
        if export_id is None:
            raise NotFoundError("unknown download link")
        return self.objects.get(EXPORT_BUCKET, f"{export_id}.zip"), f"{export_id}.zip"

    # -- media --------------------------------------------------------------

    def media(self, user: str, media_id: str) -> tuple[bytes, str]:
        """Clip media bytes, or raw video bytes while still HOT."""
        clip = self.clips.maybe(media_id)
        if clip is not None:
            repo = self.repos.get(self.clips.repo_of(media_id))
            if not repo.visible_to(user):
                raise ForbiddenError(f"clip {media_id} is not visible to {user}")
            return self._clip_media(media_id), "application/json"
        with self._lock:
            record = self._videos.get(media_id)
        if record is None:
            raise NotFoundError(f"unknown media id: {media_id}")
        repo = self.repos.get(record.repo_id)
        if not repo.visible_to(user):
            raise ForbiddenError(f"video {media_id} is not visible to {user}")
        ref = record.video.object_ref
        if ref is None:
            raise NotFoundError(f"video {media_id} has no stored media")
        if ref.storage_class.value == "COLD":
            raise ArchivedError(
                f"raw video {media_id} is archived in cold storage and is not served"
            )
        return self.objects.get(ref.bucket, ref.key), "application/json"

    # -- misc ---------------------------------------------------------------

    def health(self) -> dict:
        pools = {
            tag: {
                "capacity": s.capacity,
                "in_flight": s.in_flight,
                "queued": s.queued,
                "completed": s.completed,
                "failed": s.failed,
            }
            for tag, s in self.scheduler.stats().items()
        }
        return {
            "status": "ok",
            "pools": pools,
            "providers": {
                "motion": self.analyzers.motion.version,
                "ocr": self.analyzers.ocr.version,
                "aesthetic": self.analyzers.aesthetic.version,
                "profiler": self.profiler.version,
                "embedder": self.embedder.version,
                "enricher": self.enricher.version,
                "reranker": self.reranker.version,
                "matcher": self.matcher.version,
            },
        }

    def user_for_token(self, token: str) -> str | None:
        return self.config.auth.tokens.get(token)

    def close(self) -> None:
        self.scheduler.drain(timeout=30.0)


def _session_summary(record: SearchRecord) -> dict:
    return {
        "search_id": record.id,
        "query": record.text,
        "constraints": dict(record.constraints),
        "sources": list(record.sources),
        "created_at": record.created_at,
        "deep_job_ids": list(record.deep_job_ids),
    }


def _search_from_dict(row: dict) -> SearchRecord:
    from .retrieval.enrich import EnrichedQuery
    from .retrieval.search import RankedResult

    enriched = EnrichedQuery(**row["enriched"])
    results = [
        RankedResult(
            clip_id=r["clip_id"],
            repo_id=r["repo_id"],
            fused_score=r["fused_score"],
            rerank_score=r.get("rerank_score"),
            final_score=r["final_score"],
            rank=r["rank"],
        )
        for r in row.get("results", [])
    ]
    return SearchRecord(
        id=row["search_id"],
        user=row["user"],
        text=row["query"],
        sources=list(row.get("sources", [])),
        constraints=dict(row.get("constraints", {})),
        candidate_size=row.get("candidate_size", 0),
        enriched=enriched,
        results=results,
        rerank_skipped=row.get("rerank_skipped", False),
        deep_job_ids=list(row.get("deep_job_ids", [])),
        created_at=row.get("created_at", utc_now()),
    )
