"""HTTP media origin: byte-range serving and the session manifest.

Large 360-video files are streamed to the headset with plain web
requests, so the origin only needs the single-range subset of HTTP
range semantics: multi-range and non-byte units fall back to a full
200, a start at or past the end of the file is unsatisfiable (416),
and malformed headers are ignored per the usual leniency.

The sha-256 of each file doubles as its ETag and as the integrity
hash published in the manifest.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import quote

from .config import StudyConfig, direction_to_json


class RangeOutcome(enum.Enum):
    IGNORE = "ignore"  # serve the whole file with 200
    UNSATISFIABLE = "unsatisfiable"  # 416


@dataclass(frozen=True)
class ByteRange:
    start: int
    end: int  # inclusive

    def length(self) -> int:
        return self.end - self.start + 1


_RANGE_RE = re.compile(r"^bytes=(\d*)-(\d*)$")


def parse_range(header: str | None, total_length: int) -> ByteRange | RangeOutcome:
    """Interpret a single-range Range header against a file of
    total_length bytes.

    "bytes=a-b" clamps b to the last byte; "bytes=a-" runs to the end;
    "bytes=-n" is the final n bytes.  Multiple ranges, other units and
    malformed values are IGNORE; a start beyond the end (or an empty
    suffix) is UNSATISFIABLE.
    """
    if total_length <= 0:
        raise ValueError("total_length must be positive")
    if not header:
        return RangeOutcome.IGNORE
    m = _RANGE_RE.match(header.strip())
    if not m:
        return RangeOutcome.IGNORE
    first, last = m.group(1), m.group(2)
    if first == "" and last == "":
        return RangeOutcome.IGNORE
    if first == "":
        n = int(last)
        if n == 0:
            return RangeOutcome.UNSATISFIABLE
        return ByteRange(start=max(0, total_length - n), end=total_length - 1)
    start = int(first)
    if start >= total_length:
        return RangeOutcome.UNSATISFIABLE
    if last == "":
        return ByteRange(start=start, end=total_length - 1)
    end = int(last)
    if end < start:
        return RangeOutcome.IGNORE
    return ByteRange(start=start, end=min(end, total_length - 1))


# --- catalog ----------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    path: Path
    length: int
    sha256: str


class MissingMedia(Exception):
    def __init__(self, media_id: str):
        self.media_id = media_id
        super().__init__(f"media not in catalog: {media_id}")


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class MediaCatalog:
    """Immutable map of media id -> file, built by scanning a directory.

    Ids are the forward-slash relative paths under the media root,
    which is exactly how study files reference their media.
    """

    def __init__(self, entries: dict[str, CatalogEntry]):
        self.entries = dict(entries)

    @classmethod
    def scan(cls, media_dir: str | Path) -> "MediaCatalog":
        root = Path(media_dir)
        entries: dict[str, CatalogEntry] = {}
        for path in sorted(root.rglob("*")):
            if not path.is_file():
                continue
            media_id = path.relative_to(root).as_posix()
            entries[media_id] = CatalogEntry(
                path=path, length=path.stat().st_size, sha256=_sha256_file(path)
            )
        return cls(entries)

    def get(self, media_id: str) -> CatalogEntry:
        try:
            return self.entries[media_id]
        except KeyError:
            raise MissingMedia(media_id) from None

    def __contains__(self, media_id: str) -> bool:
        return media_id in self.entries


def build_manifest(cfg: StudyConfig, catalog: MediaCatalog, base_url: str) -> str:
    """JSON manifest the headset loads: resolved URLs plus integrity
    hashes for the video and each audio track."""
    base = base_url.rstrip("/")
    video_entry = catalog.get(cfg.media.url)
    manifest: dict = {
        "video": {
            "url": f"{base}/media/{quote(cfg.media.url)}",
            "width_px": cfg.media.width_px,
            "height_px": cfg.media.height_px,
            "duration_ms": cfg.media.duration_ms,
            "projection": cfg.media.projection,
            "sha256": video_entry.sha256,
        },
        "audio": [],
    }
    for track in cfg.audio_tracks:
        entry = catalog.get(track.url)
        item = {
            "id": track.id,
            "url": f"{base}/media/{quote(track.url)}",
            "start_ms": track.start_ms,
            "gain": track.gain,
            "mode": track.mode,
            "sha256": entry.sha256,
        }
        if track.anchor is not None:
            item["anchor"] = direction_to_json(track.anchor)
        manifest["audio"].append(item)
    return json.dumps(manifest, sort_keys=True)


# --- request resolution ------------------------------------------------------


@dataclass
class MediaResponse:
    status: int
    headers: dict[str, str]
    body: bytes


def _read_slice(entry: CatalogEntry, start: int, end: int) -> bytes:
    with open(entry.path, "rb") as f:
        f.seek(start)
        return f.read(end - start + 1)


def resolve_media_request(catalog: MediaCatalog, media_id: str, range_header: str | None) -> MediaResponse:
    """Framework-free core of GET /media/{id}; returns status, headers
    and body for 200 / 206 / 404 / 416."""
    if media_id not in catalog:
        return MediaResponse(404, {"Content-Type": "text/plain"}, b"unknown media id\n")
    entry = catalog.get(media_id)
    common = {
        "Accept-Ranges": "bytes",
        "ETag": f'"{entry.sha256}"',
        "Content-Type": "application/octet-stream",
    }
    outcome = parse_range(range_header, entry.length)
    if outcome is RangeOutcome.IGNORE:
        body = _read_slice(entry, 0, entry.length - 1)
        return MediaResponse(200, {**common, "Content-Length": str(entry.length)}, body)
    if outcome is RangeOutcome.UNSATISFIABLE:
        headers = {**common, "Content-Range": f"bytes */{entry.length}", "Content-Length": "0"}
        return MediaResponse(416, headers, b"")
    body = _read_slice(entry, outcome.start, outcome.end)
    headers = {
        **common,
        "Content-Range": f"bytes {outcome.start}-{outcome.end}/{entry.length}",
        "Content-Length": str(outcome.length()),
    }
    return MediaResponse(206, headers, body)
