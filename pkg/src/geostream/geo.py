"""Planar lon/lat geometry, the Streaming API location matcher, and region partitioning."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ._format import fmt_pct
from .ingest import GeoPolicy, effective_point
from .records import BBox, GeoPoint, GeometryError, Tweet

__all__ = [
    "BBox",
    "Region",
    "RegionClass",
    "GeometryError",
    "point_in_bbox",
    "bbox_intersects",
    "point_in_region",
    "points_in_region",
    "streaming_match",
    "classify_region",
    "classify_many",
    "partition_report",
    "PartitionReport",
    "load_region",
    "REGION_PRESETS",
]

REGION_PRESETS = {
    "san-diego-county": "san_diego_county.geojson",
    "california": "california.geojson",
    "columbus-city": "columbus_city.geojson",
    "ohio": "ohio.geojson",
}


class RegionClass(str, Enum):
    IN_TARGET = "InTarget"
    IN_PARENT_ONLY = "InParentOnly"
    ELSEWHERE = "Elsewhere"
    NO_LOCATION = "NoLocation"


@dataclass(frozen=True)
class Region:
    """A named polygonal boundary made of one or more closed rings (even-odd fill)."""

    name: str
    rings: tuple[tuple[tuple[float, float], ...], ...]
    parent_name: str | None = None
    bbox: BBox = field(init=False, compare=False)

    def __post_init__(self):
        if not self.rings:
            raise GeometryError(f"region {self.name!r} has no rings")
        rings = []
        for ring in self.rings:
            ring = tuple((float(x), float(y)) for x, y in ring)
            if len(ring) < 4 or ring[0] != ring[-1]:
                raise GeometryError(
                    f"region {self.name!r}: rings need >= 4 points with first == last"
                )
            rings.append(ring)
        object.__setattr__(self, "rings", tuple(rings))
        xs = [x for r in rings for x, _ in r]
        ys = [y for r in rings for _, y in r]
        object.__setattr__(self, "bbox", BBox(min(xs), min(ys), max(xs), max(ys)))

    @classmethod
    def from_bbox(cls, box: BBox, name: str = "bbox", parent_name: str | None = None):
        return cls(name, (tuple(box.ring()),), parent_name)

    def vertices(self) -> Iterable[tuple[float, float]]:
        for ring in self.rings:
            yield from ring


def point_in_bbox(p: GeoPoint, b: BBox) -> bool:
    return b.west <= p.lon <= b.east and b.south <= p.lat <= b.north


def bbox_intersects(a: BBox, b: BBox) -> bool:
    # touching edges or corners count as overlap
    return a.west <= b.east and b.west <= a.east and a.south <= b.north and b.south <= a.north


def _on_segment(x, y, x1, y1, x2, y2) -> bool:
    if min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2):
        return (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) == 0
    return False


def point_in_region(p: GeoPoint, r: Region) -> bool:
    """Even-odd ray casting over all rings; points on an edge or vertex are inside."""
    x, y = p.lon, p.lat
    b = r.bbox
    if not (b.west <= x <= b.east and b.south <= y <= b.north):
        return False
    inside = False
    for ring in r.rings:
        for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
            if _on_segment(x, y, x1, y1, x2, y2):
                return True
            if (y1 > y) != (y2 > y):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if x < xc:
                    inside = not inside
    return inside


def points_in_region(lons: np.ndarray, lats: np.ndarray, r: Region) -> np.ndarray:
    """Vectorised :func:`point_in_region` over coordinate arrays."""
    lons = np.asarray(lons, dtype=float)
    lats = np.asarray(lats, dtype=float)
    b = r.bbox
    cand = (lons >= b.west) & (lons <= b.east) & (lats >= b.south) & (lats <= b.north)
    idx = np.flatnonzero(cand)
    x, y = lons[idx], lats[idx]
    inside = np.zeros(idx.size, dtype=bool)
    edge = np.zeros(idx.size, dtype=bool)
    for ring in r.rings:
        pts = np.asarray(ring)
        for (x1, y1), (x2, y2) in zip(pts[:-1], pts[1:]):
            in_span = (
                (x >= min(x1, x2)) & (x <= max(x1, x2)) & (y >= min(y1, y2)) & (y <= max(y1, y2))
            )
            edge |= in_span & ((x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) == 0)
            crosses = (y1 > y) != (y2 > y)
            if y2 != y1:
                with np.errstate(invalid="ignore", divide="ignore"):
                    xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                inside ^= crosses & (x < xc)
    out = np.zeros(lons.shape, dtype=bool)
    out[idx] = inside | edge
    return out


def streaming_match(t: Tweet, filter_box: BBox) -> bool:
    """Decide whether the Streaming API location filter would deliver ``t``.

    Precise coordinates are tested for containment; failing that the place box is
    tested for any overlap; the deprecated ``geo`` field is never consulted.
    """
    if t.coordinates is not None:
        return point_in_bbox(t.coordinates, filter_box)
    if t.place is not None:
        return bbox_intersects(t.place.bbox, filter_box)
    return False


def classify_region(
    t: Tweet,
    target: Region,
    parent: Region | None = None,
    policy: GeoPolicy | str = GeoPolicy.COORDINATES_ONLY,
) -> RegionClass:
    p = effective_point(t, policy)
    if p is None:
        return RegionClass.NO_LOCATION
    if point_in_region(p, target):
        return RegionClass.IN_TARGET
    if parent is not None and point_in_region(p, parent):
        return RegionClass.IN_PARENT_ONLY
    return RegionClass.ELSEWHERE


def classify_many(
    tweets: Sequence[Tweet],
    target: Region,
    parent: Region | None = None,
    policy: GeoPolicy | str = GeoPolicy.COORDINATES_ONLY,
) -> list[RegionClass]:
    """Batch form of :func:`classify_region`; same answers, vectorised containment."""
    policy = GeoPolicy(policy)
    n = len(tweets)
    lons = np.full(n, np.nan)
    lats = np.full(n, np.nan)
    for i, t in enumerate(tweets):
        p = effective_point(t, policy)
        if p is not None:
            lons[i] = p.lon
            lats[i] = p.lat
    located = ~np.isnan(lons)
    in_target = points_in_region(lons, lats, target) & located
    if parent is not None:
        in_parent = points_in_region(lons, lats, parent) & located
    else:
        in_parent = np.zeros(n, dtype=bool)
    codes = np.where(
        ~located,
        3,
        np.where(in_target, 0, np.where(in_parent, 1, 2)),
    )
    lookup = [
        RegionClass.IN_TARGET,
        RegionClass.IN_PARENT_ONLY,
        RegionClass.ELSEWHERE,
        RegionClass.NO_LOCATION,
    ]
    return [lookup[c] for c in codes.tolist()]


@dataclass
class PartitionReport:
    """Tweet counts per RegionClass for one target/parent pair."""

    counts: dict[RegionClass, int]
    target_name: str = "target"
    parent_name: str | None = None

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def percent(self, cls: RegionClass) -> str:
        return fmt_pct(self.counts.get(cls, 0), self.total, 1)

    def rows(self) -> list[tuple[str, str, int, str]]:
        labels = {
            RegionClass.IN_TARGET: f"Tweets in {self.target_name}",
            RegionClass.IN_PARENT_ONLY: f"Tweets in {self.parent_name or 'parent'} (excluding {self.target_name})",
            RegionClass.ELSEWHERE: "Other Regions",
            RegionClass.NO_LOCATION: "No location",
        }
        out = []
        for cls in RegionClass:
            n = self.counts.get(cls, 0)
            if cls is RegionClass.NO_LOCATION and n == 0:
                continue
            out.append((cls.value, labels[cls], n, self.percent(cls)))
        return out

    def to_dict(self) -> dict:
        return {
            "target": self.target_name,
            "parent": self.parent_name,
            "total": self.total,
            "outside_target": self.total - self.counts.get(RegionClass.IN_TARGET, 0),
            "classes": {
                cls.value: {"count": self.counts.get(cls, 0), "percent": self.percent(cls)}
                for cls in RegionClass
            },
        }

    def to_csv(self) -> str:
        lines = ["class,label,count,percent"]
        for cls, label, n, pct in self.rows():
            lines.append(f'{cls},"{label}",{n},{pct}')
        lines.append(f'Total,"Total Tweets",{self.total},')
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        lines = [
            "| Region | Tweets | Percentage to total Tweets |",
            "|---|---:|---:|",
        ]
        for _, label, n, pct in self.rows():
            lines.append(f"| {label} | {n} | {pct} |")
        lines.append(f"| Total Tweets | {self.total} | |")
        return "\n".join(lines) + "\n"


def partition_report(
    corpus: Sequence[Tweet],
    target: Region,
    parent: Region | None = None,
    policy: GeoPolicy | str = GeoPolicy.COORDINATES_ONLY,
    classes: Sequence[RegionClass] | None = None,
) -> PartitionReport:
    if classes is None:
        classes = classify_many(corpus, target, parent, policy)
    tally = Counter(classes)
    counts = {cls: tally.get(cls, 0) for cls in RegionClass}
    return PartitionReport(counts, target.name, parent.name if parent else None)


def _rings_from_geometry(geom: dict) -> list:
    kind = geom.get("type")
    coords = geom.get("coordinates")
    if kind == "Polygon":
        return [list(map(tuple, ring)) for ring in coords]
    if kind == "MultiPolygon":
        return [list(map(tuple, ring)) for poly in coords for ring in poly]
    raise GeometryError(f"unsupported geometry type {kind!r}")


def load_region(source: str | Path, name: str | None = None) -> Region:
    """Read a Region from a GeoJSON file or a bundled preset name.

    Accepts a FeatureCollection (all features merged), a Feature, or a bare
    Polygon/MultiPolygon.  The name comes from the ``name`` property unless
    given; an optional ``parent`` property sets the parent region name.
    """
    key = str(source)
    if key in REGION_PRESETS:
        ref = resources.files("geostream") / "data" / "regions" / REGION_PRESETS[key]
        doc = json.loads(ref.read_text(encoding="utf-8"))
    else:
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)

    if doc.get("type") == "FeatureCollection":
        features = doc.get("features") or []
    elif doc.get("type") == "Feature":
        features = [doc]
    else:
        features = [{"type": "Feature", "properties": {}, "geometry": doc}]
    if not features:
        raise GeometryError(f"{source}: no features")

    rings = []
    props = {}
    for feat in features:
        props = props or (feat.get("properties") or {})
        rings.extend(_rings_from_geometry(feat.get("geometry") or {}))
    return Region(
        name or props.get("name") or Path(key).stem,
        tuple(tuple(r) for r in rings),
        props.get("parent"),
    )


def region_to_geojson(r: Region) -> dict:
    props = {"name": r.name}
    if r.parent_name:
        props["parent"] = r.parent_name
    return {
        "type": "Feature",
        "properties": props,
        "geometry": {"type": "Polygon", "coordinates": [[list(p) for p in ring] for ring in r.rings]},
    }
