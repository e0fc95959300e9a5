"""Thread-safe clip record store with status bookkeeping per repository."""

from __future__ import annotations

import threading

from .errors import NotFoundError
from .models import Clip, ClipStatus, QualitySignals
from .storage.objects import ObjectRef


class ClipStore:
    def __init__(self):
        self._clips: dict[str, Clip] = {}
        self._repo_of: dict[str, str] = {}
        self._by_repo: dict[str, list[str]] = {}
        self._lock = threading.RLock()

    def add(self, clip: Clip, repo_id: str) -> None:
        with self._lock:
            self._clips[clip.id] = clip
            self._repo_of[clip.id] = repo_id
            self._by_repo.setdefault(repo_id, []).append(clip.id)

    def get(self, clip_id: str) -> Clip:
        with self._lock:
            clip = self._clips.get(clip_id)
            if clip is None:
                raise NotFoundError(f"unknown clip: {clip_id}")
            return clip

    def maybe(self, clip_id: str) -> Clip | None:
        with self._lock:
            return self._clips.get(clip_id)

    def repo_of(self, clip_id: str) -> str:
        with self._lock:
            repo = self._repo_of.get(clip_id)
            if repo is None:
                raise NotFoundError(f"unknown clip: {clip_id}")
            return repo

    def in_repo(self, repo_id: str) -> list[Clip]:
        with self._lock:
            return [self._clips[c] for c in self._by_repo.get(repo_id, [])]

    def counts(self, repo_id: str) -> dict:
        with self._lock:
            clips = [self._clips[c] for c in self._by_repo.get(repo_id, [])]
        indexed = sum(1 for c in clips if c.status is ClipStatus.INDEXED)
        rejected: dict[str, int] = {}
        for clip in clips:
            if clip.status is ClipStatus.REJECTED:
                reason = clip.reject_reason or "unknown"
                rejected[reason] = rejected.get(reason, 0) + 1
        return {"indexed": indexed, "rejected": rejected, "total": len(clips)}

    def snapshot_record(self, clip: Clip, repo_id: str) -> dict:
        record = {
            "clip_id": clip.id,
            "repo_id": repo_id,
            "parent_video": clip.parent_video,
            "start_s": clip.start_s,
            "end_s": clip.end_s,
            "width": clip.width,
            "height": clip.height,
            "start_frame": clip.start_frame,
            "end_frame": clip.end_frame,
            "status": clip.status.value,
            "reject_reason": clip.reject_reason,
            "error": clip.error,
            "fingerprint": [str(h) for h in clip.fingerprint],
            "object_ref": None,
            "quality": None,
        }
        if clip.object_ref is not None:
            record["object_ref"] = {
                "bucket": clip.object_ref.bucket,
                "key": clip.object_ref.key,
                "size_bytes": clip.object_ref.size_bytes,
                "content_hash": clip.object_ref.content_hash,
            }
        if clip.quality is not None:
            record["quality"] = {
                "motion_score": clip.quality.motion_score,
                "ocr_coverage": clip.quality.ocr_coverage,
                "aesthetic_a": clip.quality.aesthetic_a,
                "aesthetic_b": clip.quality.aesthetic_b,
                "provider_versions": dict(clip.quality.provider_versions),
            }
        return record

    def restore_record(self, record: dict) -> None:
        quality = None
        if record.get("quality"):
            q = record["quality"]
            quality = QualitySignals(
                motion_score=q["motion_score"],
                ocr_coverage=q["ocr_coverage"],
                aesthetic_a=q["aesthetic_a"],
                aesthetic_b=q["aesthetic_b"],
                fingerprint=[int(h) for h in record.get("fingerprint", [])],
                provider_versions=dict(q.get("provider_versions", {})),
            )
        ref = None
        if record.get("object_ref"):
            o = record["object_ref"]
            ref = ObjectRef(
                bucket=o["bucket"],
                key=o["key"],
                size_bytes=o["size_bytes"],
                content_hash=o["content_hash"],
            )
        clip = Clip(
            id=record["clip_id"],
            parent_video=record["parent_video"],
            start_s=record["start_s"],
            end_s=record["end_s"],
            width=record["width"],
            height=record["height"],
            start_frame=record.get("start_frame", 0),
            end_frame=record.get("end_frame", 0),
            object_ref=ref,
            fingerprint=[int(h) for h in record.get("fingerprint", [])],
            quality=quality,
            status=ClipStatus(record["status"]),
            reject_reason=record.get("reject_reason"),
        )
        clip.error = record.get("error")
        self.add(clip, record["repo_id"])
