"""Text embedding provider contract and the deterministic test embedder."""

from __future__ import annotations

import hashlib
import re
from typing import Protocol

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class Embedder(Protocol):
    version: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Stable bag-of-tokens embedder.

    Tokenize on non-alphanumerics (lowercased); each token hashes to a
    64-bit value h, contributing +1 or -1 (sign of bit 63) at position
    h mod D. The sum is L2-normalized; no tokens yields the zero vector.
    """

    version = "hashing-embedder/1"

    def __init__(self, dimension: int = 1024):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float32)
        for token in _TOKEN_RE.findall(text.lower()):
            h = int.from_bytes(
                hashlib.blake2b(token.encode(), digest_size=8).digest(), "little"
            )
            sign = 1.0 if h >> 63 else -1.0
            vec[h % self.dimension] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            return vec
        return vec / norm


def is_normalized_or_zero(vec: np.ndarray, tol: float = 1e-6) -> bool:
    norm = float(np.linalg.norm(vec))
    return norm == 0.0 or abs(norm - 1.0) <= tol
