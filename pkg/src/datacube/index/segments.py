"""On-disk index layout: one directory per repository holding a metadata
table (metadata.jsonl, one record per clip) and one vector segment per
dimension.

Segment layout (little-endian, bit-exact across implementations):

    magic "DCVX" | version u16 | D u32 | count u64
    count * D float32 values, insertion order
    count ids, each: length u16 | UTF-8 bytes
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..config import IndexConfig
from ..errors import ValidationError
from .store import DIMENSIONS, METADATA_FIELDS, RepositoryIndex

MAGIC = b"DCVX"
VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


def write_segment(path: Path, matrix: np.ndarray, ids: list[str]) -> None:
    count, dim = matrix.shape
    if count != len(ids):
        raise ValidationError("segment id count must match vector count")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, count))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
        for clip_id in ids:
            raw = clip_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValidationError(f"id too long: {clip_id[:32]}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)


def read_segment(path: Path) -> tuple[np.ndarray, list[str]]:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValidationError(f"truncated segment header: {path}")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValidationError(f"bad segment magic in {path}")
        if version != VERSION:
            raise ValidationError(f"unsupported segment version {version} in {path}")
        payload = fh.read(count * dim * 4)
        if len(payload) != count * dim * 4:
            raise ValidationError(f"truncated vector payload: {path}")
        matrix = np.frombuffer(payload, dtype="<f4").reshape(count, dim).copy()
        ids = []
        for _ in range(count):
            (length,) = struct.unpack("<H", fh.read(2))
            ids.append(fh.read(length).decode("utf-8"))
    return matrix, ids


def save_repo(index: RepositoryIndex, directory: Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with index._lock:
        n = len(index.clip_ids)
        ids = list(index.clip_ids)
        rows = []
        for r in range(n):
            record = {"clip_id": ids[r], "repo_id": index.repo_id}
            for f in METADATA_FIELDS:
                record[f] = float(index._columns[f][r])
            rows.append(record)
        matrices = {d: index._matrices[d][:n].copy() for d in DIMENSIONS}
    with open(directory / "metadata.jsonl", "w", encoding="utf-8") as fh:
        for record in rows:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    for d in DIMENSIONS:
        write_segment(directory / f"{d}.dcvx", matrices[d], ids)


def load_repo(repo_id: str, directory: Path, config: IndexConfig) -> RepositoryIndex:
    directory = Path(directory)
    records = []
    with open(directory / "metadata.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    segments = {}
    ids: list[str] | None = None
    for d in DIMENSIONS:
        matrix, seg_ids = read_segment(directory / f"{d}.dcvx")
        if ids is None:
            ids = seg_ids
        elif ids != seg_ids:
            raise ValidationError(f"segment id order mismatch in {directory}")
        segments[d] = matrix
    ids = ids or []
    if [r["clip_id"] for r in records] != ids:
        raise ValidationError(f"metadata/segment id mismatch in {directory}")
    index = RepositoryIndex(repo_id, config)
    n = len(ids)
    index._grow(n)
    for d in DIMENSIONS:
        if segments[d].shape != (n, config.dimension):
            raise ValidationError(
                f"segment {d} has shape {segments[d].shape}, expected ({n}, {config.dimension})"
            )
        index._matrices[d][:n] = segments[d]
    for r, record in enumerate(records):
        for f in METADATA_FIELDS:
            index._columns[f][r] = float(record[f])
    index.clip_ids = ids
    index._row_of = {cid: r for r, cid in enumerate(ids)}
    return index
