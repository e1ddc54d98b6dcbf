"""Newline-delimited JSON tweet ingestion.

Records follow the Streaming API layout: ``coordinates`` is a GeoJSON point in
(lon, lat) order, ``geo`` is the deprecated (lat, lon) point and ``place``
carries a bounding-box polygon.  Everything is normalised to (lon, lat) on read.
"""

from __future__ import annotations

import gzip
import io
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from enum import Enum
from itertools import islice
from typing import IO, Iterable, Iterator

from .records import BBox, GeoPoint, GeometryError, PlaceBox, Tweet

__all__ = [
    "GeoPoint",
    "PlaceBox",
    "Tweet",
    "IngestStats",
    "ParseError",
    "CorpusIOError",
    "GeoPolicy",
    "parse_tweet",
    "read_corpus",
    "iter_lines",
    "effective_point",
    "dump_tweet",
    "write_corpus",
]

HASHTAG_RE = re.compile(r"#(\w+)")
URL_RE = re.compile(r"https?://")
_TWITTER_TIME = "%a %b %d %H:%M:%S %z %Y"
_CHUNK = 20_000
_NUMBER = (int, float)
_PLACE_CACHE: dict = {}
_decode = json.JSONDecoder().decode


class ParseError(ValueError):
    """A single input line could not be turned into a Tweet."""


class CorpusIOError(OSError):
    """Reading the corpus failed part-way; ``stats`` holds what was counted so far."""

    def __init__(self, message, stats):
        super().__init__(message)
        self.stats = stats


class GeoPolicy(str, Enum):
    COORDINATES_ONLY = "coordinates-only"
    COORDINATES_THEN_GEO = "coordinates-then-geo"


@dataclass
class IngestStats:
    total_lines: int = 0
    parsed: int = 0
    malformed: int = 0
    duplicates_dropped: int = 0
    no_location: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def _point(obj, *, swapped=False) -> GeoPoint | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ParseError(f"point must be an object, got {type(obj).__name__}")
    coords = obj.get("coordinates")
    if coords is None:
        return None
    if type(coords) is not list or len(coords) != 2:
        raise ParseError(f"bad point coordinates {coords!r}")
    a, b = coords
    if type(a) not in _NUMBER or type(b) not in _NUMBER:
        raise ParseError(f"bad point coordinates {coords!r}")
    try:
        if swapped:
            return GeoPoint(float(b), float(a), True)
        return GeoPoint(float(a), float(b))
    except GeometryError as exc:
        raise ParseError(str(exc)) from None


def _place(obj) -> PlaceBox | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ParseError("place must be an object")
    box = obj.get("bounding_box")
    if box is None:
        return None
    try:
        ring = box["coordinates"][0]
        key = (obj.get("full_name"), tuple(tuple(p) for p in ring))
    except (KeyError, IndexError, TypeError) as exc:
        raise ParseError(f"bad place bounding_box: {exc}") from None
    hit = _PLACE_CACHE.get(key)
    if hit is not None:
        return hit
    try:
        lons = [float(p[0]) for p in ring]
        lats = [float(p[1]) for p in ring]
        bbox = BBox(min(lons), min(lats), max(lons), max(lats))
    except GeometryError as exc:
        raise ParseError(str(exc)) from None
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise ParseError(f"bad place bounding_box: {exc}") from None
    place = PlaceBox(str(obj.get("full_name") or ""), bbox)
    if len(_PLACE_CACHE) < 65_536:
        # places repeat heavily; sharing one immutable object saves memory too
        _PLACE_CACHE[key] = place
    return place


def _timestamp(value) -> datetime | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ParseError(f"bad created_at {value!r}")
    try:
        if value.endswith("Z"):
            ts = datetime.fromisoformat(value[:-1] + "+00:00")
        elif value[:4].isdigit():
            ts = datetime.fromisoformat(value)
        else:
            ts = datetime.strptime(value, _TWITTER_TIME)
    except ValueError:
        raise ParseError(f"bad created_at {value!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def parse_tweet(line: str | bytes) -> Tweet:
    """Parse one JSON record into a :class:`Tweet`.

    Raises :class:`ParseError` for malformed JSON, a missing ``id`` or ``user``
    object, or coordinates outside the valid lon/lat range.
    """
    try:
        obj = _decode(line if isinstance(line, str) else line.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError("record is not a JSON object")

    tid = obj.get("id")
    if not isinstance(tid, int) or isinstance(tid, bool):
        raise ParseError("missing or non-integer id")
    user = obj.get("user")
    if not isinstance(user, dict):
        raise ParseError("missing user object")
    uid = user.get("id")
    if not isinstance(uid, int) or isinstance(uid, bool):
        raise ParseError("missing or non-integer user.id")

    text = obj.get("text") or ""
    if not isinstance(text, str):
        raise ParseError("text must be a string")
    source = obj.get("source") or ""
    if not isinstance(source, str):
        raise ParseError("source must be a string")

    entities = obj.get("entities")
    if not isinstance(entities, dict):
        entities = {}
    tags = entities.get("hashtags")
    if isinstance(tags, list):
        hashtags = tuple(
            (h.get("text") if isinstance(h, dict) else str(h)).lstrip("#") for h in tags
        )
    else:
        hashtags = tuple(HASHTAG_RE.findall(text))
    urls = entities.get("urls")
    urls_count = len(urls) if isinstance(urls, list) else len(URL_RE.findall(text))

    return Tweet(
        id=tid,
        user_id=uid,
        created_at=_timestamp(obj.get("created_at")),
        text=text,
        hashtags=hashtags,
        source_raw=sys.intern(source),
        coordinates=_point(obj.get("coordinates")),
        geo_deprecated=_point(obj.get("geo"), swapped=True),
        place=_place(obj.get("place")),
        urls_count=urls_count,
    )


def _point_json(p: GeoPoint | None, swapped=False):
    if p is None:
        return None
    coords = [p.lat, p.lon] if swapped else [p.lon, p.lat]
    return {"type": "Point", "coordinates": coords}


def to_record(t: Tweet) -> dict:
    """Canonical JSON-ready mapping for a tweet (see docs/formats.md)."""
    place = None
    if t.place is not None:
        place = {
            "full_name": t.place.full_name,
            "bounding_box": {"type": "Polygon", "coordinates": [t.place.bbox.ring()]},
        }
    return {
        "id": t.id,
        "user": {"id": t.user_id},
        "created_at": t.created_at.strftime("%Y-%m-%dT%H:%M:%SZ") if t.created_at else None,
        "text": t.text,
        "source": t.source_raw,
        "coordinates": _point_json(t.coordinates),
        "geo": _point_json(t.geo_deprecated, swapped=True),
        "place": place,
        "entities": {
            "hashtags": [{"text": h} for h in t.hashtags],
            "urls": [{}] * t.urls_count,
        },
    }


def dump_tweet(t: Tweet) -> str:
    """Serialize a tweet to one canonical NDJSON line (no trailing newline)."""
    return json.dumps(to_record(t), ensure_ascii=False, separators=(",", ":"))


def write_corpus(tweets: Iterable[Tweet], dest: str | os.PathLike | IO[str]) -> int:
    """Write tweets as canonical NDJSON; ``-`` means stdout, ``.gz`` is compressed."""
    n = 0
    with _open_write(dest) as fh:
        buf = []
        for t in tweets:
            buf.append(dump_tweet(t))
            n += 1
            if len(buf) >= _CHUNK:
                fh.write("\n".join(buf) + "\n")
                buf.clear()
        if buf:
            fh.write("\n".join(buf) + "\n")
    return n


class _NoClose:
    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()


def _open_write(dest):
    if hasattr(dest, "write"):
        return _NoClose(dest)
    if str(dest) == "-":
        return _NoClose(sys.stdout)
    if str(dest).endswith(".gz"):
        # mtime=0 keeps compressed output byte-identical across runs
        raw = open(dest, "wb")
        gz = gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0)
        wrapper = io.TextIOWrapper(gz, encoding="utf-8", newline="\n")

        class _Closing:
            def __enter__(self_inner):
                return wrapper

            def __exit__(self_inner, *exc):
                wrapper.close()
                raw.close()

        return _Closing()
    return open(dest, "w", encoding="utf-8", newline="\n")


def iter_lines(source) -> Iterator[str]:
    """Yield text lines from a path, ``-`` (stdin), open file or iterable of lines.

    Gzip input is detected by its magic bytes, so the suffix does not matter.
    """
    if isinstance(source, (str, os.PathLike)):
        if str(source) == "-":
            yield from sys.stdin
            return
        with open(source, "rb") as raw:
            magic = raw.read(2)
            raw.seek(0)
            stream = gzip.GzipFile(fileobj=raw) if magic == b"\x1f\x8b" else raw
            with io.TextIOWrapper(stream, encoding="utf-8", errors="replace") as fh:
                yield from fh
        return
    for line in source:
        yield line.decode("utf-8", "replace") if isinstance(line, bytes) else line


def _parse_many(lines: list[str]) -> list[Tweet | None]:
    out = []
    for line in lines:
        try:
            out.append(parse_tweet(line))
        except ParseError:
            out.append(None)
    return out


def _chunks(it, size):
    it = iter(it)
    while chunk := list(islice(it, size)):
        yield chunk


def read_corpus(sources, threads: int = 1) -> tuple[list[Tweet], IngestStats]:
    """Parse and deduplicate one or more NDJSON sources.

    ``sources`` is a single source or a list of them (see :func:`iter_lines`).
    Blank lines are skipped without being counted.  The first occurrence of each
    tweet id wins, in stream order, whatever the worker count.
    """
    if isinstance(sources, (str, os.PathLike)) or not isinstance(sources, (list, tuple)):
        sources = [sources]

    stats = IngestStats()
    seen: set[int] = set()
    tweets: list[Tweet] = []

    def consume(parsed):
        for t in parsed:
            stats.total_lines += 1
            if t is None:
                stats.malformed += 1
                continue
            stats.parsed += 1
            if t.id in seen:
                stats.duplicates_dropped += 1
                continue
            seen.add(t.id)
            tweets.append(t)
            if not t.has_location:
                stats.no_location += 1

    def nonblank():
        for src in sources:
            for line in iter_lines(src):
                if line.strip():
                    yield line

    try:
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                # map() yields chunk results in submission order
                for parsed in pool.map(_parse_many, _chunks(nonblank(), _CHUNK)):
                    consume(parsed)
        else:
            for chunk in _chunks(nonblank(), _CHUNK):
                consume(_parse_many(chunk))
    except OSError as exc:
        raise CorpusIOError(f"I/O error while reading corpus: {exc}", stats) from exc
    return tweets, stats


def effective_point(t: Tweet, policy: GeoPolicy | str = GeoPolicy.COORDINATES_ONLY) -> GeoPoint | None:
    """The point used for boundary tests under the given policy."""
    if t.coordinates is not None:
        return t.coordinates
    if GeoPolicy(policy) is GeoPolicy.COORDINATES_THEN_GEO:
        return t.geo_deprecated
    return None


def resolve_threads(threads: int | None) -> int:
    if threads:
        return max(1, int(threads))
    env = os.environ.get("GEOSTREAM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def write_stats_line(stats: IngestStats, fh=None) -> None:
    fh = fh or sys.stderr
    fh.write(json.dumps(stats.to_dict(), sort_keys=True) + "\n")
