"""Error hierarchy shared by all modules.

Every error carries a stable machine-readable code so the API layer can
serialize it without guessing; `detail` holds structured context.
"""

from __future__ import annotations

from typing import Any


class DataCubeError(Exception):
    """Base class; code must be one of the stable API error codes."""

    code = "INTERNAL"
    http_status = 500

    def __init__(self, message: str, detail: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


class ValidationError(DataCubeError):
    code = "VALIDATION"
    http_status = 422


class NotFoundError(DataCubeError):
    code = "NOT_FOUND"
    http_status = 404


class ConflictError(DataCubeError):
    code = "CONFLICT"
    http_status = 409


class ForbiddenError(DataCubeError):
    code = "FORBIDDEN"
    http_status = 403


class AuthError(DataCubeError):
    """Missing or unknown bearer token."""

    code = "FORBIDDEN"
    http_status = 401


class ProviderError(DataCubeError):
    """A pluggable provider failed; tasks hitting this are retryable."""

    code = "PROVIDER_UNAVAILABLE"
    http_status = 503


class ArchivedError(ConflictError):
    """Raw media moved to cold storage; not served by preview endpoints."""
