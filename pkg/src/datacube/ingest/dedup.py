"""URL- and frame-hash-based deduplication.

Two layers: normalized source URLs are checked before segmentation, clip
fingerprints (difference hashes sampled across the clip) after it. Both
registries share one lock so check-and-insert is atomic.
"""

from __future__ import annotations

import math
import statistics
import threading
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

import numpy as np

from ..config import DEFAULT_TRACKING_PARAMS
from ..errors import ValidationError
from ..frames import FrameStream

HASH_ROWS = 8
HASH_COLS = 9


def normalize_url(url: str, tracking_params=DEFAULT_TRACKING_PARAMS) -> str:
    """Canonical form: lowercase scheme/host, no fragment, no tracking
    params, remaining query params sorted by name. Path untouched."""
    try:
        parts = urlsplit(url)
    except ValueError as exc:
        raise ValidationError(f"malformed URL: {url!r}", {"url": url}) from exc
    if not parts.scheme or not parts.netloc:
        raise ValidationError(f"malformed URL: {url!r}", {"url": url})
    netloc = parts.netloc
    if "@" in netloc:
        userinfo, _, hostport = netloc.rpartition("@")
        netloc = f"{userinfo}@{hostport.lower()}"
    else:
        netloc = netloc.lower()
    tracked = set(tracking_params)
    params = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if k not in tracked
    ]
    params.sort(key=lambda kv: kv[0])
    query = urlencode(params)
    return urlunsplit((parts.scheme.lower(), netloc, parts.path, query, ""))


def _overlap_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) matrix; row k averages inputs overlapping bin k."""
    w = np.zeros((n_out, n_in), dtype=np.float64)
    step = n_in / n_out
    for k in range(n_out):
        lo, hi = k * step, (k + 1) * step
        j0, j1 = int(math.floor(lo)), int(math.ceil(hi))
        for j in range(j0, min(j1, n_in)):
            w[k, j] = min(hi, j + 1) - max(lo, j)
    return w / step


def frame_hash(frame: np.ndarray) -> int:
    """64-bit difference hash over an area-averaged 8x9 grid.

    Bit (row r, col c) is set iff down[r, c+1] > down[r, c]; bits are
    packed row-major from the most significant bit. Invariant to any
    uniform brightness offset.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2 or frame.shape[0] == 0 or frame.shape[1] == 0:
        raise ValidationError("degenerate frame grid")
    rows, cols = frame.shape
    if rows < HASH_ROWS or cols < HASH_COLS:
        raise ValidationError(
            f"frame must be at least {HASH_COLS}x{HASH_ROWS}, got {cols}x{rows}"
        )
    down = _overlap_weights(rows, HASH_ROWS) @ frame @ _overlap_weights(cols, HASH_COLS).T
    value = 0
    for r in range(HASH_ROWS):
        for c in range(HASH_COLS - 1):
            value <<= 1
            if down[r, c + 1] > down[r, c]:
                value |= 1
    return value


def hamming64(a: int, b: int) -> int:
    return (a ^ b).bit_count()


def fingerprints_match(a: list[int], b: list[int], max_median: int = 5) -> bool:
    """Duplicates iff the median Hamming distance of aligned hashes is
    within max_median. Lists align positionally up to the shorter one."""
    if not a or not b:
        return False
    aligned = [hamming64(x, y) for x, y in zip(a, b)]
    return statistics.median(aligned) <= max_median


def fingerprint_sample_indices(
    start_frame: int,
    end_frame: int,
    fps: float,
    interval_s: float = 1.0,
    min_samples: int = 3,
) -> list[int]:
    """One sample per interval of clip time, at least min_samples, spread
    uniformly over [start_frame, end_frame - 1]."""
    span = end_frame - start_frame
    if span < 1:
        raise ValidationError("empty clip boundary")
    duration = span / fps
    n = max(min_samples, int(duration // interval_s))
    if n == 1:
        return [start_frame]
    return [start_frame + (k * (span - 1)) // (n - 1) for k in range(n)]


def clip_fingerprint(
    stream: FrameStream,
    start_frame: int,
    end_frame: int,
    interval_s: float = 1.0,
    min_samples: int = 3,
) -> list[int]:
    if not (0 <= start_frame < end_frame <= stream.frame_count):
        raise ValidationError("clip boundary outside stream")
    indices = fingerprint_sample_indices(
        start_frame, end_frame, stream.fps, interval_s, min_samples
    )
    return [frame_hash(stream.frame_at(i)) for i in indices]


class DedupRegistry:
    """Atomic check-and-insert registries for URLs and clip fingerprints."""

    def __init__(self, max_median_hamming: int = 5):
        self.max_median_hamming = max_median_hamming
        self._urls: dict[str, str] = {}
        self._fingerprints: list[tuple[str, list[int]]] = []
        self._lock = threading.Lock()

    def register_url(self, url: str, video_id: str, tracking_params=DEFAULT_TRACKING_PARAMS):
        """Returns (normalized_url, existing_video_id_or_None)."""
        normalized = normalize_url(url, tracking_params)
        with self._lock:
            existing = self._urls.get(normalized)
            if existing is None:
                self._urls[normalized] = video_id
            return normalized, existing

    def register_fingerprint(self, fingerprint: list[int], clip_id: str):
        """Returns the clip id of a matching registered fingerprint, or
        None after registering this one."""
        if not fingerprint:
            raise ValidationError("fingerprint must be non-empty")
        with self._lock:
            for existing_id, existing_fp in self._fingerprints:
                if fingerprints_match(existing_fp, fingerprint, self.max_median_hamming):
                    return existing_id
            self._fingerprints.append((clip_id, list(fingerprint)))
            return None

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "urls": dict(self._urls),
                "fingerprints": [
                    {"clip_id": cid, "hashes": list(fp)}
                    for cid, fp in self._fingerprints
                ],
            }

    def restore(self, state: dict) -> None:
        with self._lock:
            self._urls = dict(state.get("urls", {}))
            self._fingerprints = [
                (row["clip_id"], [int(h) for h in row["hashes"]])
                for row in state.get("fingerprints", [])
            ]
