import gzip
import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from geostream.ingest import (
    GeoPolicy,
    ParseError,
    dump_tweet,
    effective_point,
    parse_tweet,
    read_corpus,
    resolve_threads,
    write_corpus,
)
from geostream.records import BBox, GeoPoint, GeometryError, PlaceBox, Tweet

from conftest import make_tweet

EXAMPLE = (
    '{"id":1,"user":{"id":9},"created_at":"2015-11-01T00:00:00Z","text":"hi",'
    '"source":"<a href=\\"x\\">Twitter for iPhone</a>",'
    '"coordinates":{"type":"Point","coordinates":[-117.16,32.72]}}'
)


def line(id, user=1, **extra):
    return json.dumps({"id": id, "user": {"id": user}, **extra})


class TestParseTweet:
    def test_direct_field_mapping(self):
        t = parse_tweet(EXAMPLE)
        assert t.id == 1 and t.user_id == 9
        assert t.coordinates == GeoPoint(-117.16, 32.72)
        assert "<a href" in t.source_raw and "Twitter for iPhone" in t.source_raw
        assert t.created_at == datetime(2015, 11, 1, tzinfo=timezone.utc)
        assert t.text == "hi"

    def test_null_location_fields(self):
        t = parse_tweet(line(2, coordinates=None, geo=None, place=None))
        assert t.coordinates is None and t.geo_deprecated is None and t.place is None
        assert not t.has_location

    def test_longitude_out_of_range(self):
        with pytest.raises(ParseError):
            parse_tweet(line(3, coordinates={"coordinates": [200.0, 0.0]}))

    @pytest.mark.parametrize("bad", [
        "{not json",
        "[1,2]",
        '{"user":{"id":1}}',
        '{"id":1}',
        '{"id":"1","user":{"id":1}}',
        '{"id":1,"user":{"id":true}}',
        line(4, coordinates={"coordinates": [1.0]}),
        line(4, coordinates={"coordinates": [True, 1.0]}),
        line(4, geo={"coordinates": [95.0, 0.0]}),
        line(4, created_at="yesterday"),
    ])
    def test_malformed_records(self, bad):
        with pytest.raises(ParseError):
            parse_tweet(bad)

    def test_geo_is_swapped_and_flagged(self):
        t = parse_tweet(line(5, geo={"type": "Point", "coordinates": [32.72, -117.16]}))
        assert t.geo_deprecated == GeoPoint(-117.16, 32.72, True)
        assert t.geo_deprecated.deprecated

    def test_place_polygon_becomes_bbox(self):
        ring = [[-124.4, 32.5], [-114.1, 32.5], [-114.1, 42.0], [-124.4, 42.0], [-124.4, 32.5]]
        t = parse_tweet(line(6, place={"full_name": "California, USA",
                                       "bounding_box": {"type": "Polygon", "coordinates": [ring]}}))
        assert t.place == PlaceBox("California, USA", BBox(-124.4, 32.5, -114.1, 42.0))

    def test_hashtags_from_entities_or_text(self):
        t = parse_tweet(line(7, text="#a #b", entities={"hashtags": [{"text": "Coupon"}]}))
        assert t.hashtags == ("Coupon",)
        t = parse_tweet(line(8, text="deal #Coupon and #save_20 now"))
        assert t.hashtags == ("Coupon", "save_20")

    def test_url_count_from_entities_or_text(self):
        assert parse_tweet(line(9, entities={"urls": [{}, {}]})).urls_count == 2
        assert parse_tweet(line(10, text="see http://a.b and https://c.d")).urls_count == 2
        assert parse_tweet(line(11, text="none")).urls_count == 0

    def test_twitter_timestamp_format(self):
        t = parse_tweet(line(12, created_at="Thu Nov 05 13:45:10 +0000 2015"))
        assert t.created_at == datetime(2015, 11, 5, 13, 45, 10, tzinfo=timezone.utc)

    def test_bytes_input(self):
        assert parse_tweet(EXAMPLE.encode()).id == 1


class TestReadCorpus:
    def test_keep_first_duplicate(self):
        tweets, stats = read_corpus([[line(5, text="a"), line(5, text="b"), line(7)]])
        assert [t.id for t in tweets] == [5, 7]
        assert tweets[0].text == "a"
        assert stats.duplicates_dropped == 1

    def test_malformed_counted(self):
        tweets, stats = read_corpus([[line(1), "{oops"]])
        assert len(tweets) == 1
        assert stats.malformed == 1 and stats.total_lines == 2 and stats.parsed == 1

    def test_empty(self):
        tweets, stats = read_corpus([[]])
        assert tweets == []
        assert stats.to_dict() == dict(total_lines=0, parsed=0, malformed=0,
                                       duplicates_dropped=0, no_location=0)

    def test_gzip_detected_by_magic(self, tmp_path):
        p = tmp_path / "corpus.bin"
        with gzip.open(p, "wt") as fh:
            fh.write(line(1) + "\n" + line(2) + "\n")
        tweets, _ = read_corpus(str(p))
        assert [t.id for t in tweets] == [1, 2]

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            read_corpus(str(tmp_path / "nope.ndjson"))

    def test_threads_do_not_change_output(self, tmp_path, sd_generated):
        src = tmp_path / "in.ndjson"
        sample = sd_generated.tweets[:45_000]
        write_corpus(sample + sample[:100], src)
        one, s1 = read_corpus(str(src), threads=1)
        two, s2 = read_corpus(str(src), threads=2)
        assert one == two and s1 == s2
        assert s1.duplicates_dropped == 100

    def test_dedup_idempotent(self, tmp_path):
        src = tmp_path / "a.ndjson"
        src.write_text("\n".join([line(3), line(1), line(3), line(2)]) + "\n")
        first, _ = read_corpus(str(src))
        out = tmp_path / "b.ndjson"
        write_corpus(first, out)
        second, stats = read_corpus(str(out))
        assert first == second and stats.duplicates_dropped == 0

    def test_resolve_threads_env(self, monkeypatch):
        monkeypatch.setenv("GEOSTREAM_THREADS", "3")
        assert resolve_threads(None) == 3
        assert resolve_threads(2) == 2


class TestEffectivePoint:
    def test_coordinates_take_precedence(self):
        t = make_tweet(lonlat=(-117, 32), geo=(-83, 40))
        assert effective_point(t, GeoPolicy.COORDINATES_ONLY) == GeoPoint(-117, 32)

    def test_geo_fallback(self):
        t = parse_tweet(line(1, geo={"coordinates": [32.72, -117.16]}))
        p = effective_point(t, "coordinates-then-geo")
        assert (p.lon, p.lat) == (-117.16, 32.72)
        assert effective_point(t, "coordinates-only") is None

    @pytest.mark.parametrize("policy", list(GeoPolicy))
    def test_absent(self, policy):
        assert effective_point(make_tweet(), policy) is None


def test_geometry_validation():
    with pytest.raises(GeometryError):
        GeoPoint(0, 91)
    with pytest.raises(GeometryError):
        BBox(10, 0, -10, 1)


lon = st.floats(-180, 180, allow_nan=False)
lat = st.floats(-90, 90, allow_nan=False)
point = st.tuples(lon, lat)


@st.composite
def boxes(draw):
    a, b = sorted((draw(lon), draw(lon)))
    c, d = sorted((draw(lat), draw(lat)))
    return BBox(a, c, b, d)


@st.composite
def tweets(draw):
    return Tweet(
        id=draw(st.integers(0, 2**62)),
        user_id=draw(st.integers(0, 2**62)),
        created_at=draw(st.none() | st.datetimes(
            min_value=datetime(2000, 1, 1), max_value=datetime(2030, 1, 1), timezones=st.just(timezone.utc)
        ).map(lambda d: d.replace(microsecond=0))),
        text=draw(st.text(max_size=40)),
        hashtags=tuple(draw(st.lists(st.from_regex(r"[A-Za-z0-9_]{1,8}", fullmatch=True), max_size=3))),
        source_raw=draw(st.text(max_size=30)),
        coordinates=draw(st.none() | point.map(lambda p: GeoPoint(*p))),
        geo_deprecated=draw(st.none() | point.map(lambda p: GeoPoint(p[0], p[1], True))),
        place=draw(st.none() | boxes().map(lambda b: PlaceBox("somewhere", b))),
        urls_count=draw(st.integers(0, 5)),
    )


@given(tweets())
def test_round_trip(t):
    assert parse_tweet(dump_tweet(t)) == t


@given(st.lists(st.integers(1, 30), max_size=40))
def test_first_occurrence_order(ids):
    got, stats = read_corpus([[line(i) for i in ids]])
    expected = list(dict.fromkeys(ids))
    assert [t.id for t in got] == expected
    assert stats.total_lines == stats.parsed + stats.malformed
    assert stats.duplicates_dropped == len(ids) - len(expected)
