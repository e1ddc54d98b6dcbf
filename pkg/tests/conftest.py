import os
from datetime import datetime, timezone

import pytest
from hypothesis import HealthCheck, settings

from geostream.records import BBox, GeoPoint, PlaceBox, Tweet

settings.register_profile(
    "default", max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_tweet(id=1, user=1, lonlat=None, geo=None, place=None, source="Instagram",
               tags=(), urls=0, ts=None):
    """Compact Tweet builder; ``geo`` is given in (lon, lat) order."""
    created = None
    if ts is not None:
        created = ts if isinstance(ts, datetime) else datetime.fromtimestamp(ts, tz=timezone.utc)
    return Tweet(
        id=id,
        user_id=user,
        created_at=created,
        text="",
        hashtags=tuple(tags),
        source_raw=source,
        coordinates=GeoPoint(*lonlat) if lonlat else None,
        geo_deprecated=GeoPoint(geo[0], geo[1], True) if geo else None,
        place=PlaceBox("p", BBox(*place)) if place else None,
        urls_count=urls,
    )


@pytest.fixture(scope="session")
def sd_generated():
    from geostream.synth import generate, san_diego_2015_11

    return generate(san_diego_2015_11(seed=42))


@pytest.fixture(scope="session")
def cmh_generated():
    from geostream.synth import columbus_2015_11, generate

    return generate(columbus_2015_11(seed=42))
