"""Per-user session panel: append-only search history, newest first."""

from __future__ import annotations

import threading


class SessionStore:
    def __init__(self):
        self._records: dict[str, list[dict]] = {}
        self._lock = threading.Lock()

    def append(self, user: str, summary: dict) -> None:
        with self._lock:
            self._records.setdefault(user, []).append(dict(summary))

    def attach_deep_job(self, user: str, search_id: str, job_id: str) -> None:
        with self._lock:
            for record in self._records.get(user, []):
                if record["search_id"] == search_id:
                    record.setdefault("deep_job_ids", []).append(job_id)
                    return

    def records_for(self, user: str) -> list[dict]:
        """Newest first; summaries are copies, callers cannot mutate state."""
        with self._lock:
            records = [dict(r) for r in self._records.get(user, [])]
        return sorted(records, key=lambda r: r["created_at"], reverse=True)

    def count(self, user: str) -> int:
        with self._lock:
            return len(self._records.get(user, []))
