"""Dataset export packaging.

An export is a zip archive holding manifest.jsonl at the root (one UTF-8
JSON object per line, LF endings, rows sorted by descending relevance)
plus one clips/<clip_id> media entry per row. Downloads go through
unauthenticated capability links carrying a random 128-bit token.
"""

from __future__ import annotations

import io
import json
import secrets
import zipfile
from dataclasses import dataclass, field

from ..errors import NotFoundError, ValidationError

EXPORT_CAP = 10_000

MANIFEST_FIELDS = (
    "clip_id",
    "source_repo",
    "uri",
    "duration_s",
    "width",
    "height",
    "motion_score",
    "ocr_coverage",
    "aesthetic_a",
    "aesthetic_b",
    "profile",
    "relevance",
)


@dataclass
class ExportManifest:
    export_id: str
    rows: list[dict] = field(default_factory=list)

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def to_jsonl(self) -> str:
        lines = [json.dumps(row, ensure_ascii=False, sort_keys=True) for row in self.rows]
        return "\n".join(lines) + ("\n" if lines else "")


def new_download_token() -> str:
    return secrets.token_hex(16)


def package_export(
    export_id: str,
    selection: list[tuple[str, float]],
    clip_lookup,
    media_lookup,
    cap: int = EXPORT_CAP,
) -> tuple[ExportManifest, bytes]:
    """Build the manifest and zip archive for a selection.

    selection: (clip_id, relevance) pairs; clip_lookup(clip_id) returns
    the manifest row fields except relevance; media_lookup(clip_id)
    returns the clip media bytes. Caps and missing clips are validated
    before any packaging work happens.
    """
    if not selection:
        raise ValidationError("export selection must be non-empty")
    if len(selection) > cap:
        raise ValidationError(
            f"export selection exceeds the cap of {cap} clips",
            {"cap": cap, "requested": len(selection)},
        )
    missing = [clip_id for clip_id, _ in selection if clip_lookup(clip_id) is None]
    if missing:
        raise NotFoundError(
            f"clips not found or not indexed: {', '.join(missing[:10])}",
            {"missing": missing},
        )
    ordered = sorted(selection, key=lambda item: (-item[1], item[0]))
    manifest = ExportManifest(export_id=export_id)
    for clip_id, relevance in ordered:
        row = dict(clip_lookup(clip_id))
        row["relevance"] = relevance
        missing_fields = [f for f in MANIFEST_FIELDS if f not in row]
        if missing_fields:
            raise ValidationError(
                f"clip {clip_id} row missing fields: {missing_fields}"
            )
        manifest.rows.append({f: row[f] for f in MANIFEST_FIELDS})
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", compression=zipfile.ZIP_STORED) as archive:
        archive.writestr("manifest.jsonl", manifest.to_jsonl().encode("utf-8"))
        for clip_id, _ in ordered:
            archive.writestr(f"clips/{clip_id}", media_lookup(clip_id))
    return manifest, buffer.getvalue()
