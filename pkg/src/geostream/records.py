"""Core value types shared by every stage: points, boxes, places and tweets."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime


class GeometryError(ValueError):
    """Raised when a coordinate or box is outside the supported lon/lat domain."""


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """A WGS84 position in (longitude, latitude) order.

    ``deprecated`` marks points that were read from the legacy ``geo`` field,
    which stores (lat, lon) on the wire.
    """

    lon: float
    lat: float
    deprecated: bool = False

    def __post_init__(self):
        if not (-180.0 <= self.lon <= 180.0) or not (-90.0 <= self.lat <= 90.0):
            raise GeometryError(f"point out of range: lon={self.lon!r} lat={self.lat!r}")


@dataclass(frozen=True, slots=True)
class BBox:
    west: float
    south: float
    east: float
    north: float

    def __post_init__(self):
        for lon in (self.west, self.east):
            if not -180.0 <= lon <= 180.0:
                raise GeometryError(f"longitude out of range: {lon!r}")
        for lat in (self.south, self.north):
            if not -90.0 <= lat <= 90.0:
                raise GeometryError(f"latitude out of range: {lat!r}")
        if self.west > self.east:
            # antimeridian-crossing boxes are not supported
            raise GeometryError(f"west > east in bbox {self!r}")
        if self.south > self.north:
            raise GeometryError(f"south > north in bbox {self!r}")

    @classmethod
    def parse(cls, text: str) -> "BBox":
        """Build a box from a ``west,south,east,north`` string."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise GeometryError(f"expected west,south,east,north, got {text!r}")
        try:
            w, s, e, n = (float(p) for p in parts)
        except ValueError as exc:
            raise GeometryError(f"non-numeric bbox {text!r}") from exc
        return cls(w, s, e, n)

    def ring(self) -> list[tuple[float, float]]:
        return [
            (self.west, self.south),
            (self.east, self.south),
            (self.east, self.north),
            (self.west, self.north),
            (self.west, self.south),
        ]

    def __str__(self):
        return f"{self.west!r},{self.south!r},{self.east!r},{self.north!r}"


@dataclass(frozen=True, slots=True)
class PlaceBox:
    full_name: str
    bbox: BBox


@dataclass(frozen=True, slots=True)
class Tweet:
    id: int
    user_id: int
    created_at: datetime | None = None
    text: str = ""
    hashtags: tuple[str, ...] = ()
    source_raw: str = ""
    coordinates: GeoPoint | None = None
    geo_deprecated: GeoPoint | None = None
    place: PlaceBox | None = None
    urls_count: int = 0

    @property
    def has_location(self) -> bool:
        return (
            self.coordinates is not None
            or self.geo_deprecated is not None
            or self.place is not None
        )
