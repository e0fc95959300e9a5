"""Repository registry: named, owned, private-or-shared clip collections.

Only READY repositories are searchable; a repository becomes READY when
its ingest pipeline settles and drops back to INGESTING whenever new
videos arrive.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from enum import Enum

from ..errors import ConflictError, NotFoundError, ValidationError


class Visibility(str, Enum):
    PRIVATE = "PRIVATE"
    SHARED = "SHARED"


class RepoStatus(str, Enum):
    CREATED = "CREATED"
    INGESTING = "INGESTING"
    READY = "READY"


@dataclass
class Repository:
    id: str
    name: str
    owner: str
    visibility: Visibility
    status: RepoStatus = RepoStatus.CREATED
    clip_count: int = 0
    video_count: int = 0
    rejected: dict[str, int] = field(default_factory=dict)
    duplicate_urls: list[str] = field(default_factory=list)

    def visible_to(self, user: str) -> bool:
        return self.owner == user or self.visibility is Visibility.SHARED

    def to_dict(self) -> dict:
        return {
            "repo_id": self.id,
            "name": self.name,
            "owner": self.owner,
            "visibility": self.visibility.value,
            "status": self.status.value,
            "clip_count": self.clip_count,
            "video_count": self.video_count,
            "rejected": dict(self.rejected),
            "duplicate_urls": list(self.duplicate_urls),
        }


class RepositoryRegistry:
    def __init__(self):
        self._repos: dict[str, Repository] = {}
        self._by_owner_name: dict[tuple[str, str], str] = {}
        self._pending: dict[str, int] = {}
        self._lock = threading.RLock()

    def create(self, name: str, owner: str, visibility: Visibility) -> Repository:
        name = (name or "").strip()
        if not name:
            raise ValidationError("repository name must be non-empty")
        with self._lock:
            if (owner, name) in self._by_owner_name:
                raise ConflictError(f"repository {name!r} already exists for {owner}")
            repo = Repository(
                id=f"rp_{uuid.uuid4().hex[:12]}",
                name=name,
                owner=owner,
                visibility=visibility,
            )
            self._repos[repo.id] = repo
            self._by_owner_name[(owner, name)] = repo.id
            self._pending[repo.id] = 0
            return repo

    def get(self, repo_id: str) -> Repository:
        with self._lock:
            repo = self._repos.get(repo_id)
            if repo is None:
                raise NotFoundError(f"unknown repository: {repo_id}")
            return repo

    def find(self, owner: str, name: str) -> Repository | None:
        with self._lock:
            repo_id = self._by_owner_name.get((owner, name))
            return self._repos.get(repo_id) if repo_id else None

    def listing(self, user: str, visibility: str | None = None) -> list[Repository]:
        """Caller's own repositories plus everyone's SHARED ones."""
        with self._lock:
            repos = [r for r in self._repos.values() if r.visible_to(user)]
        if visibility:
            wanted = Visibility(visibility.upper())
            repos = [r for r in repos if r.visibility is wanted]
        return sorted(repos, key=lambda r: (r.owner, r.name))

    def task_started(self, repo_id: str, count: int = 1) -> None:
        with self._lock:
            repo = self.get(repo_id)
            self._pending[repo_id] = self._pending.get(repo_id, 0) + count
            repo.status = RepoStatus.INGESTING

    def task_finished(self, repo_id: str) -> None:
        with self._lock:
            remaining = self._pending.get(repo_id, 0) - 1
            self._pending[repo_id] = max(0, remaining)
            if remaining <= 0:
                repo = self._repos.get(repo_id)
                if repo is not None and repo.status is RepoStatus.INGESTING:
                    repo.status = RepoStatus.READY

    def pending_tasks(self, repo_id: str) -> int:
        with self._lock:
            return self._pending.get(repo_id, 0)

    def require_ready(self, repo_id: str) -> Repository:
        repo = self.get(repo_id)
        if repo.status is not RepoStatus.READY:
            raise ValidationError(
                f"repository {repo.name!r} is {repo.status.value}; "
                "it becomes selectable for retrieval once processing completes"
            )
        return repo

    def record_rejection(self, repo_id: str, reason: str, count: int = 1) -> None:
        with self._lock:
            repo = self.get(repo_id)
            repo.rejected[reason] = repo.rejected.get(reason, 0) + count

    def snapshot(self) -> list[dict]:
        with self._lock:
            return [r.to_dict() for r in self._repos.values()]

    def restore(self, rows: list[dict]) -> None:
        with self._lock:
            for row in rows:
                repo = Repository(
                    id=row["repo_id"],
                    name=row["name"],
                    owner=row["owner"],
                    visibility=Visibility(row["visibility"]),
                    status=RepoStatus(row["status"]),
                    clip_count=row.get("clip_count", 0),
                    video_count=row.get("video_count", 0),
                    rejected=dict(row.get("rejected", {})),
                    duplicate_urls=list(row.get("duplicate_urls", [])),
                )
                # an interrupted ingest can never settle after a restart
                if repo.status is RepoStatus.INGESTING:
                    repo.status = RepoStatus.READY
                self._repos[repo.id] = repo
                self._by_owner_name[(repo.owner, repo.name)] = repo.id
                self._pending[repo.id] = 0
