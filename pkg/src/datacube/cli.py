"""Administrative command-line client.

Talks to a running service (DATACUBE_URL / DATACUBE_TOKEN) or boots the
whole stack in-process against a local data root (--in-process), which
exercises exactly the same /v1 endpoints through an ASGI test transport.

Exit codes: 0 success, 2 validation/usage, 3 remote error.
"""

from __future__ import annotations

import json
import os
import sys
import time
from pathlib import Path

import click
import httpx

from .config import PlatformConfig

EXIT_VALIDATION = 2
EXIT_REMOTE = 3


class CliFailure(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class ApiClient:
    """Thin wrapper shared by remote (httpx) and embedded (TestClient) modes."""

    def __init__(self, http: httpx.Client, token: str):
        self.http = http
        self.token = token

    def request(self, method: str, path: str, **kwargs) -> dict:
        headers = kwargs.pop("headers", {})
        headers["Authorization"] = f"Bearer {self.token}"
        try:
            response = self.http.request(method, path, headers=headers, **kwargs)
        except httpx.HTTPError as exc:
            raise CliFailure(f"cannot reach service: {exc}", EXIT_REMOTE)
        if response.status_code >= 400:
            try:
                body = response.json()
                message = f"{body.get('code', 'ERROR')}: {body.get('message', '')}"
            except Exception:  # noqa: BLE001
                message = f"HTTP {response.status_code}"
            code = EXIT_VALIDATION if response.status_code == 422 else EXIT_REMOTE
            raise CliFailure(message, code)
        if response.headers.get("content-type", "").startswith("application/json"):
            return response.json()
        return {"raw": response.content}

    def get_bytes(self, path: str) -> bytes:
        response = self.http.request(
            "GET", path, headers={"Authorization": f"Bearer {self.token}"}
        )
        if response.status_code >= 400:
            raise CliFailure(f"download failed: HTTP {response.status_code}", EXIT_REMOTE)
        return response.content


class AppContext:
    def __init__(self, url, token, in_process, data_root, config_path, poll_interval):
        self.url = url
        self.token = token
        self.in_process = in_process
        self.data_root = data_root
        self.config_path = config_path
        self.poll_interval = poll_interval
        self._client: ApiClient | None = None
        self._platform = None

    def client(self) -> ApiClient:
        if self._client is not None:
            return self._client
        if self.in_process:
            from fastapi.testclient import TestClient

            from .api import create_app
            from .platform import Platform

            config = self._load_config()
            self._platform = Platform(config)
            http = TestClient(create_app(self._platform), raise_server_exceptions=False)
            self._client = ApiClient(http, self.token)
        else:
            http = httpx.Client(base_url=self.url, timeout=60.0)
            self._client = ApiClient(http, self.token)
        return self._client

    def _load_config(self) -> PlatformConfig:
        if self.config_path:
            config = PlatformConfig.from_file(self.config_path)
        else:
            config = PlatformConfig.from_env()
        if self.data_root:
            config.data_root = Path(self.data_root)
        return config

    def close(self):
        if self._platform is not None:
            self._platform.close()


pass_ctx = click.make_pass_decorator(AppContext)


@click.group()
@click.option("--url", envvar="DATACUBE_URL", default="http://127.0.0.1:8176", show_default=True)
@click.option("--token", envvar="DATACUBE_TOKEN", default="local-admin", show_default=True)
@click.option("--in-process", is_flag=True, help="Boot the full stack in this process.")
@click.option("--data-root", envvar="DATACUBE_DATA", default=None, help="State directory for --in-process.")
@click.option("--config", "config_path", envvar="DATACUBE_CONFIG", default=None)
@click.option("--poll-interval", type=float, default=1.0, show_default=True)
@click.pass_context
def main(ctx, url, token, in_process, data_root, config_path, poll_interval):
    """DataCube: ingest, search, deep-match, and export video corpora."""
    ctx.obj = AppContext(url, token, in_process, data_root, config_path, poll_interval)
    ctx.call_on_close(ctx.obj.close)


def _resolve_repo(client: ApiClient, name_or_id: str) -> dict:
    repos = client.request("GET", "/v1/repositories")["repositories"]
    for repo in repos:
        if repo["repo_id"] == name_or_id:
            return repo
    matches = [r for r in repos if r["name"] == name_or_id]
    if len(matches) == 1:
        return matches[0]
    if len(matches) > 1:
        raise CliFailure(
            f"repository name {name_or_id!r} is ambiguous; use its id", EXIT_VALIDATION
        )
    raise CliFailure(f"no visible repository named {name_or_id!r}", EXIT_REMOTE)


@main.command()
@click.option("--repo", required=True, help="Target repository (created when absent).")
@click.option("--visibility", type=click.Choice(["private", "shared"]), default="private")
@click.option("--no-wait", is_flag=True, help="Return after enqueueing, skip polling.")
@click.argument("paths", nargs=-1, required=True)
@pass_ctx
def ingest(ctx, repo, visibility, no_wait, paths):
    """Upload video descriptor files and wait for the repository to be READY."""
    descriptors = []
    for path in paths:
        p = Path(path)
        if not p.is_file():
            raise CliFailure(f"no such file: {path}", EXIT_VALIDATION)
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise CliFailure(f"{path} is not valid JSON: {exc}", EXIT_VALIDATION)
        descriptors.extend(raw if isinstance(raw, list) else [raw])
    client = ctx.client()
    repos = client.request("GET", "/v1/repositories")["repositories"]
    mine = [r for r in repos if r["name"] == repo]
    if mine:
        repo_row = mine[0]
    else:
        repo_row = client.request(
            "POST", "/v1/repositories", json={"name": repo, "visibility": visibility}
        )["repository"]
    repo_id = repo_row["repo_id"]
    result = client.request(
        "POST", f"/v1/repositories/{repo_id}/videos", json={"videos": descriptors}
    )
    click.echo(f"repository: {repo} ({repo_id})")
    click.echo(f"enqueued ingest tasks: {len(result['ingest_task_ids'])}")
    if result["duplicates"]:
        click.echo(f"duplicates(url): {len(result['duplicates'])}")
    if no_wait:
        return
    while True:
        detail = client.request("GET", f"/v1/repositories/{repo_id}")
        if detail["status"] == "READY" and detail.get("pending_tasks", 0) == 0:
            break
        time.sleep(ctx.poll_interval)
    click.echo(f"status: {detail['status']}")
    click.echo(f"clips indexed: {detail['clip_count']}")
    for reason in sorted(detail.get("rejected", {})):
        click.echo(f"rejected({reason}): {detail['rejected'][reason]}")


def _parse_filters(spec: str | None) -> dict | None:
    if not spec:
        return None
    filters: dict = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise CliFailure(f"bad filter {part!r}; expected key=value", EXIT_VALIDATION)
        key, _, value = part.partition("=")
        key = key.strip()
        if key in ("min_width", "min_height"):
            filters[key] = int(value)
        elif key == "duration":
            lo, _, hi = value.partition(":")
            filters["duration_range"] = [float(lo), float(hi)]
        else:
            lo, _, hi = value.partition(":")
            filters[key] = [float(lo) if lo else None, float(hi) if hi else None]
    return filters


def _print_results(rows: list[dict], fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(rows, indent=2))
        return
    if fmt == "tsv":
        for row in rows:
            click.echo(f"{row['rank']}\t{row['clip_id']}\t{row['relevance']}")
        return
    click.echo(f"{'rank':>4}  {'clip_id':<18} relevance")
    for row in rows:
        click.echo(f"{row['rank']:>4}  {row['clip_id']:<18} {row['relevance']}")


@main.command()
@click.option("--sources", required=True, help="Comma-separated repository names or ids.")
@click.option("--filters", "filter_spec", default=None,
              help="e.g. duration=5:30,min_width=640,motion_score=10:100")
@click.option("--candidate-size", type=int, default=None)
@click.option("--deep", is_flag=True, help="Launch a deep-matching job and wait for it.")
@click.option("--scope", type=int, default=None, help="Deep retrieval scope (default 500).")
@click.option("--format", "fmt", type=click.Choice(["table", "tsv", "json"]), default="table")
@click.option("--page-size", type=int, default=None)
@click.argument("query")
@pass_ctx
def search(ctx, sources, filter_spec, candidate_size, deep, scope, fmt, page_size, query):
    """Run a retrieval query and print the ranked results."""
    client = ctx.client()
    source_ids = [_resolve_repo(client, s.strip())["repo_id"] for s in sources.split(",")]
    body = {
        "query": query,
        "sources": source_ids,
        "filters": _parse_filters(filter_spec),
        "candidate_size": candidate_size,
        "deep": deep,
        "scope": scope,
        "page_size": page_size,
    }
    result = client.request("POST", "/v1/search", json=body)
    if fmt == "table":
        click.echo(f"search: {result['search_id']}  results: {result['total_results']}")
    _print_results(result["results"], fmt)
    if not deep:
        return
    job_id = result["deep_job_id"]
    if fmt == "table":
        click.echo(f"deep job: {job_id}")
    while True:
        job = client.request("GET", f"/v1/jobs/{job_id}")
        if job["state"] in ("COMPLETED", "FAILED", "CANCELLED"):
            break
        time.sleep(ctx.poll_interval)
    if job["state"] != "COMPLETED":
        raise CliFailure(f"deep job ended {job['state']}: {job.get('error')}", EXIT_REMOTE)
    refined = [
        {"rank": r["rank"], "clip_id": r["clip_id"], "relevance": round(r["relevance"], 3)}
        for r in job["results"]
    ]
    if fmt == "table":
        click.echo(f"refined results: {len(refined)}")
    _print_results(refined, fmt)


@main.command()
@click.option("--search", "search_id", default=None, help="Export from a search's results.")
@click.option("--clips", default=None, help="Comma-separated clip ids.")
@click.option("--top", "top", type=int, default=None, help="Keep only the top K results.")
@click.option("--no-wait", is_flag=True)
@click.option("--out", type=click.Path(), default=None, help="Also download the archive here.")
@pass_ctx
def export(ctx, search_id, clips, top, no_wait, out):
    """Package search results (or explicit clips) as a downloadable dataset."""
    client = ctx.client()
    body = {
        "search_id": search_id,
        "clip_ids": [c.strip() for c in clips.split(",")] if clips else None,
        "limit": top,
    }
    record = client.request("POST", "/v1/exports", json=body)
    export_id = record["export_id"]
    click.echo(f"export: {export_id}")
    if no_wait:
        return
    while True:
        record = client.request("GET", f"/v1/exports/{export_id}")
        if record["status"] in ("COMPLETED", "FAILED"):
            break
        time.sleep(ctx.poll_interval)
    if record["status"] != "COMPLETED":
        raise CliFailure(f"export failed: {record.get('error')}", EXIT_REMOTE)
    click.echo(f"rows: {record['row_count']}")
    click.echo(f"link: {record['link']}")
    if out:
        data = client.get_bytes(record["link"])
        Path(out).write_bytes(data)
        click.echo(f"saved: {out} ({len(data)} bytes)")


@main.group()
def jobs():
    """Inspect and control deep-retrieval jobs."""


@jobs.command("list")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
@pass_ctx
def jobs_list(ctx, fmt):
    rows = ctx.client().request("GET", "/v1/jobs")["jobs"]
    if fmt == "json":
        click.echo(json.dumps(rows, indent=2))
        return
    click.echo(f"{'job_id':<18} {'state':<10} {'progress':>8}  search")
    for job in rows:
        click.echo(
            f"{job['job_id']:<18} {job['state']:<10} {job['progress']:>8.2f}  {job['search_id']}"
        )


@jobs.command("cancel")
@click.argument("job_id")
@pass_ctx
def jobs_cancel(ctx, job_id):
    job = ctx.client().request("POST", f"/v1/jobs/{job_id}/cancel")
    click.echo(f"{job['job_id']}: {job['state']}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8176, show_default=True)
@pass_ctx
def serve(ctx, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app
    from .platform import Platform

    platform = Platform(ctx._load_config())
    try:
        uvicorn.run(create_app(platform), host=host, port=port, log_level="warning")
    finally:
        platform.close()


if __name__ == "__main__":
    main()
