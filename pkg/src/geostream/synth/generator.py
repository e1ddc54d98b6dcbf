"""Deterministic synthetic corpora with exact region, source and user-activity counts."""

from __future__ import annotations

import csv
import html
import io
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from ..geo import Region, RegionClass, load_region, points_in_region
from ..ingest import write_corpus
from ..records import BBox, GeoPoint, PlaceBox, Tweet
from .users import Infeasible, solve_user_counts

KM_PER_DEG = 6371.0 * math.pi / 180.0
HUMAN_USER_BASE = 1_000
BOT_USER_BASE = 900_000_000
BACKGROUND_USER_BASE = 2_000_000_000
DEFAULT_ID_BASE = 660_000_000_000_000_000
NOV_2015 = (datetime(2015, 11, 1, tzinfo=timezone.utc), datetime(2015, 12, 1, tzinfo=timezone.utc))


class SpecError(ValueError):
    """The corpus specification is inconsistent or infeasible."""


# -- spatial samplers -------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    """Uniform over the stratum's own area (target, parent ring, or outside)."""

    def propose(self, rng, n, area):
        return area.propose(rng, n)


@dataclass(frozen=True)
class Disc:
    lon: float
    lat: float
    radius_km: float

    def propose(self, rng, n, area):
        r = self.radius_km * np.sqrt(rng.random(n))
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
        dlat = r * np.sin(theta) / KM_PER_DEG
        dlon = r * np.cos(theta) / (KM_PER_DEG * math.cos(math.radians(self.lat)))
        return self.lon + dlon, self.lat + dlat


@dataclass(frozen=True)
class Segment:
    lon1: float
    lat1: float
    lon2: float
    lat2: float
    jitter_km: float = 0.2

    def propose(self, rng, n, area):
        t = rng.random(n)
        jx = rng.normal(0.0, self.jitter_km, n)
        jy = rng.normal(0.0, self.jitter_km, n)
        lat = self.lat1 + t * (self.lat2 - self.lat1) + jy / KM_PER_DEG
        lon = self.lon1 + t * (self.lon2 - self.lon1) + jx / (KM_PER_DEG * math.cos(math.radians(lat.mean())))
        return lon, lat


Sampler = Uniform | Disc | Segment


def parse_sampler(text: str) -> Sampler:
    """``uniform``, ``point:lon,lat``, ``disc:lon,lat,km`` or ``segment:lon1,lat1,lon2,lat2[,km]``.

    Arguments may also be separated by spaces or semicolons, which keeps them
    unquoted inside CSV source tables.
    """
    text = (text or "uniform").strip()
    kind, _, args = text.partition(":")
    try:
        vals = [float(v) for v in re.split(r"[,;\s]+", args.strip())] if args.strip() else []
    except ValueError:
        raise SpecError(f"bad sampler {text!r}") from None
    if kind == "uniform" and not vals:
        return Uniform()
    if kind == "point" and len(vals) == 2:
        return Disc(vals[0], vals[1], 0.0)
    if kind == "disc" and len(vals) == 3:
        return Disc(*vals)
    if kind == "segment" and len(vals) in (4, 5):
        return Segment(*vals)
    raise SpecError(f"bad sampler {text!r}")


@dataclass
class _Area:
    """Where points of one region class may fall, plus its uniform proposal box."""

    cls: RegionClass
    target: Region
    parent: Region
    near: BBox
    far: BBox | None = None
    far_share: float = 0.0

    def propose(self, rng, n):
        if self.cls is RegionClass.IN_TARGET:
            box = self.target.bbox
        elif self.cls is RegionClass.IN_PARENT_ONLY:
            box = self.parent.bbox
        else:
            box = self.near
        lon = rng.uniform(box.west, box.east, n)
        lat = rng.uniform(box.south, box.north, n)
        if self.cls is RegionClass.ELSEWHERE and self.far is not None and self.far_share > 0:
            far = rng.random(n) < self.far_share
            k = int(far.sum())
            lon[far] = rng.uniform(self.far.west, self.far.east, k)
            lat[far] = rng.uniform(self.far.south, self.far.north, k)
        return lon, lat

    def accept(self, lon, lat):
        ok = (np.abs(lon) <= 180) & (np.abs(lat) <= 90)
        in_t = points_in_region(lon, lat, self.target)
        if self.cls is RegionClass.IN_TARGET:
            return ok & in_t
        in_p = points_in_region(lon, lat, self.parent)
        if self.cls is RegionClass.IN_PARENT_ONLY:
            return ok & in_p & ~in_t
        return ok & ~in_p & ~in_t


def _sample(sampler: Sampler, area: _Area, n: int, rng) -> tuple[np.ndarray, np.ndarray]:
    lons, lats, have = [], [], 0
    for _ in range(10_000):
        if have >= n:
            break
        batch = max(64, 2 * (n - have))
        lon, lat = sampler.propose(rng, batch, area)
        lon, lat = np.round(lon, 6), np.round(lat, 6)
        keep = area.accept(lon, lat)
        lons.append(lon[keep])
        lats.append(lat[keep])
        have += int(keep.sum())
    else:
        raise SpecError(f"sampler {sampler!r} cannot place points in {area.cls.value}")
    if n == 0:
        return np.empty(0), np.empty(0)
    return np.concatenate(lons)[:n], np.concatenate(lats)[:n]


# -- specification ----------------------------------------------------------


@dataclass
class SourceAlloc:
    """``count`` tweets from one client, optionally hashtag-tagged and spatially clustered.

    ``category`` marks blacklisted bot sources; those tweets come from a single
    bot account and are excluded from the human user model.
    """

    source: str
    count: int
    hashtag: str | None = None
    sampler: Sampler = field(default_factory=Uniform)
    category: str | None = None
    label: str | None = None


@dataclass
class Stratum:
    region_class: RegionClass
    sources: list[SourceAlloc]
    # coordinates: precise point; leak: geo + parent-sized place only; none: no location
    location: str = "coordinates"

    @property
    def count(self) -> int:
        return sum(a.count for a in self.sources)


@dataclass
class UserConstraints:
    unique_users: int
    pct_exactly_1: float
    top1pct_share: float
    max_count: int
    pct_at_most: float | None = None


@dataclass
class CorpusSpec:
    name: str
    seed: int
    target: Region
    parent: Region
    strata: list[Stratum]
    filter_box: BBox | None = None
    user_model: UserConstraints | list[int] | None = None
    time_window: tuple[datetime, datetime] = NOV_2015
    near_box: BBox | None = None
    far_box: BBox | None = None
    far_share: float = 0.0
    human_url_rate: float = 0.1
    id_base: int = DEFAULT_ID_BASE

    def __post_init__(self):
        if self.filter_box is None:
            self.filter_box = self.target.bbox

    @property
    def total(self) -> int:
        return sum(s.count for s in self.strata)

    def region_mix(self) -> dict[RegionClass, int]:
        out = {cls: 0 for cls in RegionClass}
        for s in self.strata:
            cls = RegionClass.NO_LOCATION if s.location == "none" else s.region_class
            out[cls] += s.count
        return out

    def source_mix(self, region_class: RegionClass | None = None) -> dict[tuple[str, str | None], int]:
        out: dict = {}
        for s in self.strata:
            if region_class is not None and s.region_class is not region_class:
                continue
            for a in s.sources:
                key = (a.source, a.hashtag)
                out[key] = out.get(key, 0) + a.count
        return out

    @property
    def human_total(self) -> int:
        return sum(
            a.count
            for s in self.strata
            if s.region_class is RegionClass.IN_TARGET and s.location == "coordinates"
            for a in s.sources
            if a.category is None
        )

    def user_counts(self) -> list[int] | None:
        """Per-user tweet counts for the human in-target tweets, most active first."""
        model = self.user_model
        if model is None:
            return None
        if isinstance(model, UserConstraints):
            try:
                counts = solve_user_counts(
                    model.unique_users, self.human_total, model.pct_exactly_1,
                    model.top1pct_share, model.max_count, model.pct_at_most,
                )
            except Infeasible as exc:
                raise SpecError(str(exc)) from exc
        else:
            counts = sorted((int(c) for c in model), reverse=True)
        if sum(counts) != self.human_total:
            raise SpecError(
                f"user model covers {sum(counts)} tweets but the spec has {self.human_total} human tweets"
            )
        if counts and counts[-1] < 1:
            raise SpecError("user counts must be >= 1")
        return counts


# -- generation -------------------------------------------------------------


@dataclass
class GeneratedCorpus:
    spec: CorpusSpec
    tweets: list[Tweet]
    labels: list[RegionClass]
    sources: list[str]
    clusters: dict[str, dict]

    def lines(self) -> list[str]:
        from ..ingest import dump_tweet

        return [dump_tweet(t) for t in self.tweets]

    def write(self, dest) -> int:
        return write_corpus(self.tweets, dest)

    def labels_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "region_class", "source"])
        for t, cls, src in zip(self.tweets, self.labels, self.sources):
            w.writerow([t.id, cls.value, src])
        return buf.getvalue()


def source_anchor(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-") or "client"
    return f'<a href="https://{slug}.example.com" rel="nofollow">{html.escape(name, quote=False)}</a>'


def generate(spec: CorpusSpec) -> GeneratedCorpus:
    """Materialise ``spec``; the same spec and seed always give identical tweets."""
    rng = np.random.default_rng(spec.seed)
    near = spec.near_box or spec.parent.bbox
    t0 = int(spec.time_window[0].timestamp())
    t1 = int(spec.time_window[1].timestamp())
    if t1 <= t0:
        raise SpecError("empty time window")
    human_counts = spec.user_counts()

    cls_code, alloc_idx, lon_all, lat_all, strat_idx = [], [], [], [], []
    allocs: list[tuple[Stratum, SourceAlloc]] = []
    clusters = {}
    for si, stratum in enumerate(spec.strata):
        if stratum.location not in ("coordinates", "leak", "none"):
            raise SpecError(f"unknown location mode {stratum.location!r}")
        area = _Area(stratum.region_class, spec.target, spec.parent, near, spec.far_box, spec.far_share)
        for alloc in stratum.sources:
            if alloc.count < 0:
                raise SpecError(f"negative count for {alloc.source!r}")
            ai = len(allocs)
            allocs.append((stratum, alloc))
            if stratum.location == "none":
                lon = lat = np.full(alloc.count, np.nan)
            else:
                lon, lat = _sample(alloc.sampler, area, alloc.count, rng)
            if alloc.label and isinstance(alloc.sampler, Disc):
                s = alloc.sampler
                clusters[alloc.label] = {"lon": s.lon, "lat": s.lat, "radius_km": s.radius_km}
            elif alloc.label and isinstance(alloc.sampler, Segment):
                clusters[alloc.label] = vars(alloc.sampler).copy()
            cls_code += [stratum.region_class] * alloc.count
            alloc_idx.append(np.full(alloc.count, ai))
            strat_idx.append(np.full(alloc.count, si))
            lon_all.append(lon)
            lat_all.append(lat)

    n = len(cls_code)
    alloc_idx = np.concatenate(alloc_idx) if n else np.empty(0, int)
    strat_idx = np.concatenate(strat_idx) if n else np.empty(0, int)
    lon_all = np.concatenate(lon_all) if n else np.empty(0)
    lat_all = np.concatenate(lat_all) if n else np.empty(0)

    # user ids
    users = np.zeros(n, dtype=np.int64)
    is_bot = np.array([allocs[a][1].category is not None for a in range(len(allocs))], dtype=bool)
    bot_ids: dict[str, int] = {}
    for ai, (_, alloc) in enumerate(allocs):
        if alloc.category is not None:
            bot_ids.setdefault(alloc.source, BOT_USER_BASE + len(bot_ids))
    human_mask = np.zeros(n, dtype=bool)
    for ai, (stratum, alloc) in enumerate(allocs):
        if alloc.category is None and stratum.region_class is RegionClass.IN_TARGET and stratum.location == "coordinates":
            human_mask |= alloc_idx == ai
    human_slots = np.flatnonzero(human_mask)
    if human_counts is not None:
        ids = np.repeat(HUMAN_USER_BASE + np.arange(len(human_counts)), human_counts)
        users[human_slots] = ids[rng.permutation(ids.size)]
    else:
        users[human_slots] = HUMAN_USER_BASE + rng.integers(0, max(1, human_slots.size // 3), human_slots.size)
    for ai, (_, alloc) in enumerate(allocs):
        if alloc.category is not None:
            users[alloc_idx == ai] = bot_ids[alloc.source]
    for si, stratum in enumerate(spec.strata):
        slots = np.flatnonzero((strat_idx == si) & ~human_mask & ~is_bot[alloc_idx] if n else [])
        if slots.size:
            pool = max(1, slots.size // 3)
            users[slots] = BACKGROUND_USER_BASE + si * 10_000_000 + rng.integers(0, pool, slots.size)

    stamps = rng.integers(t0, t1, n)
    url_draw = rng.random(n)
    order = np.lexsort((np.arange(n), stamps))

    anchors = [source_anchor(a.source) for _, a in allocs]
    target_place = PlaceBox(spec.target.name, spec.target.bbox)
    leak_place = PlaceBox(spec.parent.name, spec.parent.bbox)
    tweets, labels, sources = [], [], []
    for pos, i in enumerate(order.tolist()):
        ai = int(alloc_idx[i])
        stratum, alloc = allocs[ai]
        bot = alloc.category is not None
        urls = 1 if bot or url_draw[i] < spec.human_url_rate else 0
        text = "Synthetic geotagged post"
        tags = (alloc.hashtag,) if alloc.hashtag else ()
        if tags:
            text += f" #{alloc.hashtag}"
        if urls:
            text += " https://t.co/synthetic"
        coords = geo = place = None
        if stratum.location != "none":
            lon, lat = float(lon_all[i]), float(lat_all[i])
            geo = GeoPoint(lon, lat, True)
            if stratum.location == "coordinates":
                coords = GeoPoint(lon, lat)
                place = target_place
            else:
                place = leak_place
        tweets.append(
            Tweet(
                id=spec.id_base + pos,
                user_id=int(users[i]),
                created_at=datetime.fromtimestamp(int(stamps[i]), tz=timezone.utc),
                text=text,
                hashtags=tags,
                source_raw=anchors[ai],
                coordinates=coords,
                geo_deprecated=geo,
                place=place,
                urls_count=urls,
            )
        )
        labels.append(RegionClass.NO_LOCATION if stratum.location == "none" else stratum.region_class)
        sources.append(alloc.source)
    return GeneratedCorpus(spec, tweets, labels, sources, clusters)


# -- manifest files -------------------------------------------------------------


def _read_sources_csv(path: Path) -> list[SourceAlloc]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                SourceAlloc(
                    source=row["source_name"],
                    count=int(row["count"]),
                    hashtag=(row.get("hashtag") or "").strip() or None,
                    sampler=parse_sampler(row.get("sampler") or "uniform"),
                    category=(row.get("category") or "").strip() or None,
                    label=(row.get("label") or "").strip() or None,
                )
            )
    return out


def _parse_time(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(timezone.utc)


def load_manifest(path: str | Path, seed: int | None = None) -> CorpusSpec:
    """Build a :class:`CorpusSpec` from a JSON manifest (see docs/formats.md)."""
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent

    def region(ref):
        p = base / ref
        return load_region(p if p.exists() else ref)

    strata = []
    for s in doc["strata"]:
        srcs = s["sources"]
        if isinstance(srcs, str):
            allocs = _read_sources_csv(base / srcs)
        else:
            allocs = [
                SourceAlloc(
                    source=a["source_name"],
                    count=int(a["count"]),
                    hashtag=a.get("hashtag") or None,
                    sampler=parse_sampler(a.get("sampler", "uniform")),
                    category=a.get("category") or None,
                    label=a.get("label"),
                )
                for a in srcs
            ]
        strata.append(Stratum(RegionClass(s["region_class"]), allocs, s.get("location", "coordinates")))

    um = doc.get("user_model")
    if um is None:
        user_model = None
    elif "counts" in um:
        user_model = [int(c) for c in um["counts"]]
    else:
        user_model = UserConstraints(
            int(um["unique_users"]), float(um["pct_exactly_1"]), float(um["top1pct_share"]),
            int(um["max_count"]), um.get("pct_at_most"),
        )
    window = doc.get("time_window")
    return CorpusSpec(
        name=doc.get("name", path.stem),
        seed=int(seed if seed is not None else doc.get("seed", 0)),
        target=region(doc["target"]),
        parent=region(doc["parent"]),
        strata=strata,
        filter_box=BBox.parse(doc["filter_bbox"]) if doc.get("filter_bbox") else None,
        user_model=user_model,
        time_window=(_parse_time(window[0]), _parse_time(window[1])) if window else NOV_2015,
        near_box=BBox.parse(doc["near_bbox"]) if doc.get("near_bbox") else None,
        far_box=BBox.parse(doc["far_bbox"]) if doc.get("far_bbox") else None,
        far_share=float(doc.get("far_share", 0.0)),
    )


def validate_labels(corpus: GeneratedCorpus, policy: str = "coordinates-then-geo") -> int:
    """Number of tweets whose planted region label disagrees with classify_region."""
    from ..geo import classify_region

    spec = corpus.spec
    return sum(
        classify_region(t, spec.target, spec.parent, policy) is not cls
        for t, cls in zip(corpus.tweets, corpus.labels)
    )


def scaled_counts(counts: Sequence[int], factor: float) -> list[int]:
    return [int(math.floor(c * factor + 0.5)) for c in counts]
