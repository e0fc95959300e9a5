"""Request bodies for the /v1 JSON API (snake_case wire fields)."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class CreateRepositoryRequest(BaseModel):
    name: str = ""
    visibility: str = "private"


class UploadVideosRequest(BaseModel):
    videos: list[dict[str, Any]] = Field(default_factory=list)


class SearchRequest(BaseModel):
    query: str = ""
    sources: list[str] = Field(default_factory=list)
    filters: dict[str, Any] | None = None
    candidate_size: int | None = None
    page: int = 1
    page_size: int | None = None
    deep: bool = False
    scope: int | None = None


class DeepJobRequest(BaseModel):
    search_id: str
    scope: int | None = None


class ExportRequest(BaseModel):
    search_id: str | None = None
    clip_ids: list[str] | None = None
    limit: int | None = None
