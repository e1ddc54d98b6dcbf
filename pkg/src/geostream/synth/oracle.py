"""Independent re-statement of the Streaming API location rules, for differential tests.

Deliberately shares no code with :mod:`geostream.geo`.
"""

from __future__ import annotations

import numpy as np

from ..records import BBox, GeoPoint, PlaceBox, Tweet


def naive_match_oracle(t: Tweet, filter_box: BBox) -> bool:
    lo_lon, lo_lat, hi_lon, hi_lat = filter_box.west, filter_box.south, filter_box.east, filter_box.north
    if t.coordinates is not None:
        lon, lat = t.coordinates.lon, t.coordinates.lat
        return not (lon < lo_lon or lon > hi_lon or lat < lo_lat or lat > hi_lat)
    if t.place is not None:
        pb = t.place.bbox
        # closed-interval intersection per axis
        lon_lo, lon_hi = max(lo_lon, pb.west), min(hi_lon, pb.east)
        lat_lo, lat_hi = max(lo_lat, pb.south), min(hi_lat, pb.north)
        return lon_lo <= lon_hi and lat_lo <= lat_hi
    return False


def random_oracle_tweets(n: int, seed: int, filter_box: BBox) -> list[Tweet]:
    """Seeded mix of coordinate, place-only, geo-only and location-free tweets.

    Roughly a third of the values are snapped onto the filter box edges so the
    boundary-inclusive cases get exercised.
    """
    rng = np.random.default_rng(seed)
    w, s, e, nn = filter_box.west, filter_box.south, filter_box.east, filter_box.north
    dx, dy = e - w, nn - s

    def lon():
        r = rng.random()
        if r < 0.15:
            return float(rng.choice([w, e]))
        return float(np.clip(w + rng.uniform(-1.0, 2.0) * dx, -180, 180))

    def lat():
        r = rng.random()
        if r < 0.15:
            return float(rng.choice([s, nn]))
        return float(np.clip(s + rng.uniform(-1.0, 2.0) * dy, -90, 90))

    def box():
        a, b = sorted((lon(), lon()))
        c, d = sorted((lat(), lat()))
        if rng.random() < 0.2:
            # touch the filter box from outside along one side
            side = rng.integers(4)
            if side == 0:
                a, b = e, e + rng.uniform(0, dx)
            elif side == 1:
                a, b = w - rng.uniform(0, dx), w
            elif side == 2:
                c, d = nn, nn + rng.uniform(0, dy)
            else:
                c, d = s - rng.uniform(0, dy), s
            a, b = float(np.clip(a, -180, 180)), float(np.clip(b, -180, 180))
            c, d = float(np.clip(c, -90, 90)), float(np.clip(d, -90, 90))
        return BBox(a, c, b, d)

    out = []
    for i in range(n):
        kind = rng.integers(5)
        coords = geo = place = None
        if kind in (0, 1):
            coords = GeoPoint(lon(), lat())
            if rng.random() < 0.5:
                place = PlaceBox("p", box())
        elif kind == 2:
            place = PlaceBox("p", box())
        elif kind == 3:
            geo = GeoPoint(lon(), lat(), True)
            if rng.random() < 0.3:
                place = PlaceBox("p", box())
        out.append(Tweet(id=i + 1, user_id=int(rng.integers(1, 500)), coordinates=coords,
                         geo_deprecated=geo, place=place))
    return out
