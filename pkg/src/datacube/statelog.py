"""Append-only JSONL record logs used for desk-scale persistence.

Each mutation appends a full record keyed by an id field; reloading
keeps the last record per key. Logs are human-inspectable and safe for
concurrent appends within one process.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path


class JsonlLog:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def load(self) -> list[dict]:
        if not self.path.is_file():
            return []
        records = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(json.loads(line))
        return records

    def load_latest(self, key: str) -> list[dict]:
        """Last record per key, in first-seen order."""
        latest: dict[str, dict] = {}
        for record in self.load():
            latest[record[key]] = record
        return list(latest.values())
