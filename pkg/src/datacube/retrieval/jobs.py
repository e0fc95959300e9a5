"""Background deep-retrieval jobs.

A deep job replays the top-scope ranked results of a search through the
matcher provider (direct query-vs-clip comparison), drops candidates
failing the query's exclusion constraints, and re-sorts survivors by
matcher relevance. Jobs run on the gpu pool as DEEP_MATCH tasks with a
strict state machine and monotone progress.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Protocol

from ..config import RetrievalConfig
from ..errors import ConflictError, NotFoundError, ProviderError, ValidationError
from ..profiles import SemanticProfile
from ..scheduler import Scheduler, Task, TaskKind
from .enrich import EnrichedQuery
from .search import SearchRecord, utc_now


class JobState(str, Enum):
    QUEUED = "QUEUED"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"
    CANCELLED = "CANCELLED"


LEGAL_TRANSITIONS = {
    JobState.QUEUED: {JobState.RUNNING, JobState.CANCELLED},
    JobState.RUNNING: {JobState.COMPLETED, JobState.FAILED, JobState.CANCELLED},
    JobState.COMPLETED: set(),
    JobState.FAILED: set(),
    JobState.CANCELLED: set(),
}

TERMINAL_STATES = {JobState.COMPLETED, JobState.FAILED, JobState.CANCELLED}


class MatcherProvider(Protocol):
    version: str

    def match(
        self,
        enriched: EnrichedQuery,
        profile: SemanticProfile,
        frame_ref: str | None = None,
    ) -> tuple[float, bool]: ...


@dataclass
class DeepJob:
    id: str
    search_id: str
    user: str
    scope: int
    state: JobState = JobState.QUEUED
    progress: float = 0.0
    results: list[dict] = field(default_factory=list)
    skipped: int = 0
    error: str | None = None
    created_at: str = field(default_factory=utc_now)
    started_at: str | None = None
    finished_at: str | None = None
    history: list[str] = field(default_factory=lambda: [JobState.QUEUED.value])
    cancel_requested: bool = False

    def snapshot(self) -> dict:
        return {
            "job_id": self.id,
            "search_id": self.search_id,
            "user": self.user,
            "scope": self.scope,
            "state": self.state.value,
            "progress": self.progress,
            "results": [dict(r) for r in self.results],
            "skipped": self.skipped,
            "error": self.error,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


class DeepJobManager:
    def __init__(
        self,
        scheduler: Scheduler,
        matcher: MatcherProvider,
        profile_lookup: Callable[[str], SemanticProfile | None],
        search_lookup: Callable[[str], SearchRecord],
        config: RetrievalConfig,
        on_update: Callable[[DeepJob], None] | None = None,
    ):
        self.scheduler = scheduler
        self.matcher = matcher
        self.profile_lookup = profile_lookup
        self.search_lookup = search_lookup
        self.config = config
        self.on_update = on_update
        self._jobs: dict[str, DeepJob] = {}
        self._lock = threading.Lock()

    # -- state machine ------------------------------------------------------

    def _transition(self, job: DeepJob, new_state: JobState) -> bool:
        """Move atomically; returns False when the move is illegal (the
        caller decides whether that is an error or a lost race)."""
        with self._lock:
            if new_state not in LEGAL_TRANSITIONS[job.state]:
                return False
            job.state = new_state
            job.history.append(new_state.value)
            if new_state is JobState.RUNNING:
                job.started_at = utc_now()
            elif new_state in TERMINAL_STATES:
                job.finished_at = utc_now()
            return True

    def _notify(self, job: DeepJob) -> None:
        if self.on_update is not None:
            try:
                self.on_update(job)
            except Exception:  # noqa: BLE001 - persistence must not kill jobs
                pass

    # -- public API ---------------------------------------------------------

    def start(self, search_id: str, scope: int | None = None, user: str = "") -> DeepJob:
        scope = scope if scope is not None else self.config.deep_scope_default
        if not 1 <= scope <= self.config.deep_scope_max:
            raise ValidationError(
                f"deep retrieval scope must be in [1, {self.config.deep_scope_max}]",
                {"scope": scope, "max": self.config.deep_scope_max},
            )
        record = self.search_lookup(search_id)  # raises NotFoundError
        job = DeepJob(
            id=f"jb_{uuid.uuid4().hex[:12]}",
            search_id=search_id,
            user=user or record.user,
            scope=scope,
        )
        with self._lock:
            self._jobs[job.id] = job
        self._notify(job)
        self.scheduler.submit(
            Task(kind=TaskKind.DEEP_MATCH, fn=lambda: self._run(job.id))
        )
        return job

    def get(self, job_id: str) -> DeepJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise NotFoundError(f"unknown deep job: {job_id}")
        return job

    def status(self, job_id: str) -> dict:
        job = self.get(job_id)
        with self._lock:
            return job.snapshot()

    def list_for(self, user: str) -> list[dict]:
        with self._lock:
            jobs = [j.snapshot() for j in self._jobs.values() if j.user == user]
        return sorted(jobs, key=lambda j: j["created_at"], reverse=True)

    def cancel(self, job_id: str) -> dict:
        job = self.get(job_id)
        with self._lock:
            if job.state in TERMINAL_STATES:
                raise ConflictError(
                    f"job {job_id} is {job.state.value}; terminal jobs cannot be cancelled"
                )
            job.cancel_requested = True
        if self._transition(job, JobState.CANCELLED):
            # QUEUED (or RUNNING between candidates) cancelled right here;
            # a running worker observes cancel_requested at its next step.
            self._notify(job)
        with self._lock:
            return job.snapshot()

    def restore(self, snapshot: dict) -> None:
        state = JobState(snapshot["state"])
        error = snapshot.get("error")
        if state in (JobState.QUEUED, JobState.RUNNING):
            # jobs interrupted by a restart cannot resume; mark failed
            state = JobState.FAILED
            error = error or "interrupted by platform restart"
        job = DeepJob(
            id=snapshot["job_id"],
            search_id=snapshot["search_id"],
            user=snapshot.get("user", ""),
            scope=snapshot["scope"],
            state=state,
            progress=snapshot.get("progress", 0.0),
            results=[dict(r) for r in snapshot.get("results", [])],
            skipped=snapshot.get("skipped", 0),
            error=error,
            created_at=snapshot.get("created_at", utc_now()),
            started_at=snapshot.get("started_at"),
            finished_at=snapshot.get("finished_at"),
            history=[state.value],
        )
        with self._lock:
            self._jobs[job.id] = job

    # -- worker -------------------------------------------------------------

    def _run(self, job_id: str) -> None:
        job = self.get(job_id)
        if not self._transition(job, JobState.RUNNING):
            return  # cancelled while queued; never runs
        self._notify(job)
        try:
            record = self.search_lookup(job.search_id)
            candidates = record.results[: job.scope]
            enriched = record.enriched
            survivors: list[tuple[float, str, str]] = []
            total = len(candidates)
            for position, candidate in enumerate(candidates, start=1):
                with self._lock:
                    if job.cancel_requested:
                        break
                profile = self.profile_lookup(candidate.clip_id)
                if profile is None:
                    job.skipped += 1
                else:
                    try:
                        relevance, passes = self.matcher.match(
                            enriched, profile, frame_ref=candidate.clip_id
                        )
                    except ProviderError:
                        job.skipped += 1
                    else:
                        if passes:
                            survivors.append(
                                (float(relevance), candidate.clip_id, candidate.repo_id)
                            )
                with self._lock:
                    job.progress = max(job.progress, position / total)
            with self._lock:
                was_cancelled = job.cancel_requested
            if was_cancelled:
                if self._transition(job, JobState.CANCELLED):
                    with self._lock:
                        job.results = []  # partial results are discarded
                    self._notify(job)
                return
            survivors.sort(key=lambda item: (-item[0], item[1]))
            if self._transition(job, JobState.COMPLETED):
                with self._lock:
                    job.results = [
                        {
                            "rank": position,
                            "clip_id": clip_id,
                            "repo_id": repo_id,
                            "relevance": relevance,
                        }
                        for position, (relevance, clip_id, repo_id) in enumerate(
                            survivors, start=1
                        )
                    ]
                    job.progress = 1.0
                self._notify(job)
        except Exception as exc:  # noqa: BLE001 - worker crash -> FAILED
            job.error = f"{type(exc).__name__}: {exc}"
            if self._transition(job, JobState.FAILED):
                self._notify(job)
