"""HTTP service exposing repositories, ingestion, search, sessions, deep
jobs, exports, downloads and media preview over JSON (HTTP/1.1).

Auth is static bearer tokens mapped to user ids in configuration.
Every non-2xx body serializes as {"code", "message", "detail"} with a
stable code; downloads are the one unauthenticated surface (capability
links).
"""

from __future__ import annotations

from fastapi import Depends, FastAPI, Header, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from ..errors import AuthError, DataCubeError, NotFoundError, ValidationError
from ..platform import Platform
from .schemas import (
    CreateRepositoryRequest,
    DeepJobRequest,
    ExportRequest,
    SearchRequest,
    UploadVideosRequest,
)

_STATUS_CODES = {
    401: "FORBIDDEN",
    403: "FORBIDDEN",
    404: "NOT_FOUND",
    405: "NOT_FOUND",
    409: "CONFLICT",
    422: "VALIDATION",
    503: "PROVIDER_UNAVAILABLE",
}


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="datacube", version="0.1.0", docs_url=None, redoc_url=None)
    app.state.platform = platform

    def current_user(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise AuthError("missing bearer token")
        user = platform.user_for_token(authorization.removeprefix("Bearer ").strip())
        if user is None:
            raise AuthError("unknown bearer token")
        return user

    @app.exception_handler(DataCubeError)
    async def handle_domain_error(request: Request, exc: DataCubeError):
        return JSONResponse(
            status_code=exc.http_status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_request_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "VALIDATION",
                "message": "request body failed validation",
                "detail": {"errors": [str(e.get("msg", e)) for e in exc.errors()]},
            },
        )

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse(
            status_code=exc.status_code,
            content={
                "code": _STATUS_CODES.get(exc.status_code, "INTERNAL"),
                "message": str(exc.detail),
                "detail": {},
            },
        )

    @app.exception_handler(Exception)
    async def handle_unexpected(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={
                "code": "INTERNAL",
                "message": f"{type(exc).__name__}: {exc}",
                "detail": {},
            },
        )

    # -- repositories -------------------------------------------------------

    @app.post("/v1/repositories", status_code=201)
    def create_repository(body: CreateRepositoryRequest, user: str = Depends(current_user)):
        repo = platform.create_repository(user, body.name, body.visibility)
        return {"repo_id": repo["repo_id"], "repository": repo}

    @app.get("/v1/repositories")
    def list_repositories(
        visibility: str | None = None, user: str = Depends(current_user)
    ):
        return {"repositories": platform.list_repositories(user, visibility)}

    @app.get("/v1/repositories/{repo_id}")
    def repository_detail(repo_id: str, user: str = Depends(current_user)):
        return platform.repository_detail(user, repo_id)

    @app.post("/v1/repositories/{repo_id}/videos", status_code=202)
    def upload_videos(
        repo_id: str, body: UploadVideosRequest, user: str = Depends(current_user)
    ):
        if not body.videos:
            raise ValidationError("upload payload must contain at least one video")
        return platform.ingest(user, repo_id, body.videos)

    # -- search and sessions --------------------------------------------------

    @app.post("/v1/search")
    def search(body: SearchRequest, user: str = Depends(current_user)):
        return platform.search(
            user,
            body.query,
            body.sources,
            filters=body.filters,
            candidate_size=body.candidate_size,
            page=body.page,
            page_size=body.page_size,
            deep=body.deep,
            scope=body.scope,
        )

    @app.get("/v1/search/{search_id}")
    def search_page(
        search_id: str,
        page: int = 1,
        page_size: int | None = None,
        user: str = Depends(current_user),
    ):
        return platform.search_page(user, search_id, page, page_size)

    @app.get("/v1/sessions")
    def sessions(user: str = Depends(current_user)):
        return platform.session(user)

    # -- deep jobs ------------------------------------------------------------

    @app.post("/v1/deep-jobs", status_code=202)
    def start_deep_job(body: DeepJobRequest, user: str = Depends(current_user)):
        return platform.start_deep_job(user, body.search_id, body.scope)

    @app.get("/v1/jobs")
    def list_jobs(user: str = Depends(current_user)):
        return {"jobs": platform.list_jobs(user)}

    @app.get("/v1/jobs/{job_id}")
    def job_status(job_id: str, user: str = Depends(current_user)):
        return platform.job_status(user, job_id)

    @app.post("/v1/jobs/{job_id}/cancel")
    def cancel_job(job_id: str, user: str = Depends(current_user)):
        return platform.cancel_job(user, job_id)

    # -- exports and downloads ------------------------------------------------

    @app.post("/v1/exports", status_code=202)
    def start_export(body: ExportRequest, user: str = Depends(current_user)):
        return platform.start_export(
            user, search_id=body.search_id, clip_ids=body.clip_ids, limit=body.limit
        )

    @app.get("/v1/exports/{export_id}")
    def export_status(export_id: str, user: str = Depends(current_user)):
        return platform.export_status(user, export_id)

    @app.get("/v1/downloads/{token}")
    def download(token: str):
        data, filename = platform.download(token)
        return Response(
            content=data,
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    # -- media ----------------------------------------------------------------

    @app.get("/v1/clips/{media_id}/media")
    def media(media_id: str, request: Request, user: str = Depends(current_user)):
        data, content_type = platform.media(user, media_id)
        range_header = request.headers.get("range")
        if range_header:
            start, end = _parse_range(range_header, len(data))
            return Response(
                content=data[start : end + 1],
                status_code=206,
                media_type=content_type,
                headers={
                    "Content-Range": f"bytes {start}-{end}/{len(data)}",
                    "Accept-Ranges": "bytes",
                },
            )
        return Response(
            content=data, media_type=content_type, headers={"Accept-Ranges": "bytes"}
        )

    # -- health ----------------------------------------------------------------

    @app.get("/v1/health")
    def health(user: str = Depends(current_user)):
        return platform.health()

    return app


def _parse_range(header: str, size: int) -> tuple[int, int]:
    if not header.startswith("bytes="):
        raise ValidationError(f"unsupported range unit: {header!r}")
    spec = header.removeprefix("bytes=").split(",")[0].strip()
    start_s, _, end_s = spec.partition("-")
    try:
        if start_s:
            start = int(start_s)
            end = int(end_s) if end_s else size - 1
        else:
            # suffix form: last N bytes
            start = max(0, size - int(end_s))
            end = size - 1
    except ValueError as exc:
        raise ValidationError(f"malformed range header: {header!r}") from exc
    if start < 0 or start >= size or end < start:
        raise NotFoundError(f"range {header!r} outside object of {size} bytes")
    return start, min(end, size - 1)
