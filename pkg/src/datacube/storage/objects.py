"""Filesystem-backed object store with object-storage semantics.

Layout: <root>/<bucket>/<key> plus a sidecar <key>.sha256 holding the
content digest. Writes go through a temp file and os.replace, so
same-key puts are last-write-wins with no torn reads; gets re-verify
the digest. Cold storage is the distinct bucket prefix "cold/".
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from ..errors import NotFoundError, ValidationError

COLD_PREFIX = "cold/"


class StorageClass(str, Enum):
    HOT = "HOT"
    COLD = "COLD"


@dataclass(frozen=True)
class ObjectRef:
    bucket: str
    key: str
    size_bytes: int
    content_hash: str

    @property
    def storage_class(self) -> StorageClass:
        return StorageClass.COLD if self.bucket.startswith(COLD_PREFIX) else StorageClass.HOT

    @property
    def uri(self) -> str:
        return f"datacube://{self.bucket}/{self.key}"


def _check_component(name: str, value: str) -> None:
    if not value or value.startswith("/") or ".." in value.split("/"):
        raise ValidationError(f"invalid {name}: {value!r}")


class ObjectStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, bucket: str, key: str) -> Path:
        _check_component("bucket", bucket)
        _check_component("key", key)
        return self.root / bucket / key

    def put(self, bucket: str, key: str, data: bytes) -> ObjectRef:
        path = self._path(bucket, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha256(data).hexdigest()
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".put-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        side = path.with_name(path.name + ".sha256")
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".put-")
        with os.fdopen(fd, "w") as fh:
            fh.write(digest)
        os.replace(tmp, side)
        return ObjectRef(bucket=bucket, key=key, size_bytes=len(data), content_hash=digest)

    def get(self, bucket: str, key: str) -> bytes:
        path = self._path(bucket, key)
        if not path.is_file():
            raise NotFoundError(f"object not found: {bucket}/{key}")
        data = path.read_bytes()
        side = path.with_name(path.name + ".sha256")
        if side.is_file():
            expected = side.read_text().strip()
            actual = hashlib.sha256(data).hexdigest()
            if actual != expected:
                raise ValidationError(
                    f"content hash mismatch for {bucket}/{key}",
                    {"expected": expected, "actual": actual},
                )
        return data

    def ref(self, bucket: str, key: str) -> ObjectRef:
        path = self._path(bucket, key)
        if not path.is_file():
            raise NotFoundError(f"object not found: {bucket}/{key}")
        side = path.with_name(path.name + ".sha256")
        digest = side.read_text().strip() if side.is_file() else ""
        return ObjectRef(
            bucket=bucket, key=key, size_bytes=path.stat().st_size, content_hash=digest
        )

    def exists(self, bucket: str, key: str) -> bool:
        return self._path(bucket, key).is_file()

    def delete(self, bucket: str, key: str) -> None:
        """Idempotent: deleting a missing key is a no-op."""
        path = self._path(bucket, key)
        for p in (path, path.with_name(path.name + ".sha256")):
            try:
                p.unlink()
            except FileNotFoundError:
                pass

    def move_cold(self, ref: ObjectRef) -> ObjectRef:
        """Move an object under the cold/ bucket prefix atomically."""
        if ref.storage_class is StorageClass.COLD:
            return ref
        data = self.get(ref.bucket, ref.key)
        with self._lock:
            cold = self.put(COLD_PREFIX + ref.bucket, ref.key, data)
            self.delete(ref.bucket, ref.key)
        return cold

    def media_size(self, ref: ObjectRef) -> int:
        return self._path(ref.bucket, ref.key).stat().st_size
