"""Calibrated presets for November 2015 San Diego County and City of Columbus corpora."""

from __future__ import annotations

from ..geo import RegionClass, load_region
from .._format import round_half_up
from ..records import BBox
from ..source_classifier import load_blacklist
from ..user_stats import top_user_count
from .generator import CorpusSpec, Disc, Segment, SourceAlloc, Stratum, Uniform, UserConstraints

SD_DOWNTOWN = (-117.1611, 32.7157)
SD_CITY_HALL = (-117.1625, 32.7166)
CMH_DOWNTOWN = (-82.9988, 39.9612)
CMH_CITY_HALL = (-83.0007, 39.9623)

# bot tweet counts per (source_name, required_hashtag)
SD_NOISE = {
    ("TweetMyJOBS", None): 16005,
    ("SafeTweet by TweetMyJOBS", None): 4726,
    ("CareerCenter", None): 6,
    ("dlvr.it", None): 2837,
    ("Golfstar", None): 269,
    ("dine here", None): 182,
    ("Simply Best Coupons", None): 77,
    ("Auto City Sales", None): 56,
    ("sp_california", "Coupon"): 41,
    ("Cities", None): 2105,
    ("iembot", None): 24,
    ("Sandaysoft Cumulus", None): 7,
    ("Earthquake", "Earthquake"): 762,
    ("everyEarthquake", None): 203,
    ("EarthquakeTrack.com", None): 69,
    ("QuakeSOS", None): 9,
    ("San Diego Trends", None): 843,
    ("WordPress.com", None): 111,
    ("TTN SD traffic", None): 512,
    ("TTN LA traffic", None): 11,
}

CMH_NOISE = {
    ("TweetMyJOBS", None): 16789,
    ("SafeTweet by TweetMyJOBS", None): 6250,
    ("dlvr.it", None): 1642,
    ("circlepix", None): 147,
    ("dine here", None): 77,
    ("Beer Menus", None): 53,
    ("sp_ohio", "Coupon"): 4,
    ("DanceDeets", None): 4,
    ("sp_oregon", "Coupon"): 3,
    ("SmartSearch", None): 2,
    ("JCScoop", None): 1,
    ("LeadingCourses.com", None): 1,
    ("TTN CMH traffic", None): 1486,
    ("Columbus Trends", None): 1021,
    ("eLobbyist", None): 80,
    ("WordPress.com", None): 10,
    ("twitterfeed", None): 8,
    ("stolen_bike_alerter", None): 1,
    ("Cities", None): 578,
    ("iembot", None): 337,
}

# human in-target clients; the Instagram count is a reference figure
SD_HUMAN = [
    ("Instagram", 46484),
    ("Foursquare", 9000),
    ("Twitter for Android", 4200),
    ("Twitter for iPhone", 2500),
    ("Twitter Web Client", 1900),
    ("Untappd", 1500),
    ("Tweetbot for iOS", 1200),
    ("Hootsuite", 1000),
    ("Facebook", 800),
    ("Path", 505),
]

CMH_HUMAN = [
    ("Instagram", 11000),
    ("Foursquare", 4000),
    ("Twitter for Android", 3000),
    ("Twitter for iPhone", 2000),
    ("Twitter Web Client", 1200),
    ("Untappd", 950),
    ("Tweetbot for iOS", 800),
    ("Hootsuite", 700),
    ("Facebook", 600),
    ("Path", 547),
]

BACKGROUND_SHARES = [
    ("Instagram", 0.45),
    ("Foursquare", 0.10),
    ("Twitter for iPhone", 0.20),
    ("Twitter for Android", 0.20),
    ("Twitter Web Client", 0.05),
]

SD_USERS = UserConstraints(15916, 0.49, 0.16, 903, 0.842)
CMH_USERS = UserConstraints(8758, 0.58, 0.19, 964, 0.895)


def _scale(n: int, factor: float) -> int:
    return int(n * factor + 0.5) if factor != 1.0 else n


def _largest_remainder(total: int, shares) -> list[tuple[str, int]]:
    raw = [(name, total * w) for name, w in shares]
    base = [int(v) for _, v in raw]
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i][1] - base[i]), i))
    for i in order[: total - sum(base)]:
        base[i] += 1
    return [(name, b) for (name, _), b in zip(raw, base)]


def _background(total: int) -> list[SourceAlloc]:
    return [SourceAlloc(name, n) for name, n in _largest_remainder(total, BACKGROUND_SHARES)]


def _noise_allocs(blacklist, counts, samplers, factor) -> list[SourceAlloc]:
    out = []
    for entry in blacklist:
        key = (entry.source_name, entry.required_hashtag)
        sampler, label = samplers.get(entry.source_name, (Uniform(), None))
        out.append(
            SourceAlloc(
                entry.source_name, _scale(counts[key], factor), entry.required_hashtag,
                sampler, entry.category.value, label,
            )
        )
    return out


def _user_model(model: UserConstraints, factor: float, strata) -> UserConstraints:
    if factor == 1.0:
        return model
    users = _scale(model.unique_users, factor)
    total = sum(
        a.count for s in strata if s.region_class is RegionClass.IN_TARGET
        for a in s.sources if a.category is None
    )
    k = top_user_count(users, 0.01)
    top = int(round_half_up(model.top1pct_share * total))
    # the top cohort must fit below the max, and the rest of it above the <=5 tier
    lo = -(-(top + k - 1) // k)
    hi = top - (k - 1) * 6 if k > 1 else top
    max_count = min(max(_scale(model.max_count, factor), lo), hi)
    return UserConstraints(users, model.pct_exactly_1, model.top1pct_share, max_count, model.pct_at_most)


def san_diego_2015_11(seed: int = 0, scale: float = 1.0) -> CorpusSpec:
    """229,408 tweets: 97,944 in the county, 56,382 elsewhere in California, 75,082 beyond.

    ``scale`` multiplies every count (used for throughput runs); at 1.0 the
    reference counts are reproduced exactly.
    """
    target = load_region("san-diego-county")
    parent = load_region("california")
    bl = load_blacklist("san-diego-2015-11")
    samplers = {
        "TweetMyJOBS": (Disc(*SD_DOWNTOWN, 3.0), "tweetmyjobs_downtown"),
        "SafeTweet by TweetMyJOBS": (Disc(*SD_DOWNTOWN, 5.0), "safetweet_downtown"),
        "dlvr.it": (Disc(*SD_DOWNTOWN, 0.0), "dlvrit_point"),
        "San Diego Trends": (Disc(*SD_CITY_HALL, 0.0), "trends_city_hall"),
        "TTN SD traffic": (Segment(-117.13, 32.60, -117.33, 33.15, 0.3), "ttn_sd_corridor"),
        "TTN LA traffic": (Segment(-117.35, 33.15, -117.45, 33.30, 0.3), "ttn_la_corridor"),
    }
    human = [SourceAlloc(name, _scale(n, scale)) for name, n in SD_HUMAN]
    insta = human[0]
    downtown = min(_scale(20000, scale), insta.count)
    human[0:1] = [
        SourceAlloc("Instagram", downtown, sampler=Disc(*SD_DOWNTOWN, 10.0), label="instagram_downtown"),
        SourceAlloc("Instagram", insta.count - downtown),
    ]
    strata = [
        Stratum(RegionClass.IN_TARGET, _noise_allocs(bl, SD_NOISE, samplers, scale) + human),
        Stratum(RegionClass.IN_PARENT_ONLY, _background(_scale(56382, scale)), "leak"),
        Stratum(RegionClass.ELSEWHERE, _background(_scale(75082, scale)), "leak"),
    ]
    return CorpusSpec(
        name="san-diego-2015-11",
        seed=seed,
        target=target,
        parent=parent,
        strata=strata,
        user_model=_user_model(SD_USERS, scale, strata),
        near_box=BBox(-125.0, 25.0, -100.0, 45.0),
        far_box=BBox(-170.0, -55.0, 170.0, 70.0),
        far_share=0.15,
    )


def columbus_2015_11(seed: int = 0, scale: float = 1.0) -> CorpusSpec:
    """63,570 tweets: 53,291 in the city, 10,043 elsewhere in Ohio, 236 beyond."""
    target = load_region("columbus-city")
    parent = load_region("ohio")
    bl = load_blacklist("columbus-2015-11")
    samplers = {
        "TweetMyJOBS": (Disc(*CMH_DOWNTOWN, 3.0), "tweetmyjobs_downtown"),
        "SafeTweet by TweetMyJOBS": (Disc(*CMH_DOWNTOWN, 5.0), "safetweet_downtown"),
        "dlvr.it": (Disc(*CMH_DOWNTOWN, 0.0), "dlvrit_point"),
        "Columbus Trends": (Disc(*CMH_CITY_HALL, 0.0), "trends_city_hall"),
    }
    noise = _noise_allocs(bl, CMH_NOISE, samplers, scale)
    # traffic bot split across the two interstates crossing downtown
    i = next(k for k, a in enumerate(noise) if a.source == "TTN CMH traffic")
    ttn = noise[i]
    west_east = min(_scale(800, scale), ttn.count)
    noise[i:i + 1] = [
        SourceAlloc(ttn.source, west_east, None, Segment(-83.15, 39.95, -82.80, 39.97, 0.3), ttn.category, "ttn_i70"),
        SourceAlloc(ttn.source, ttn.count - west_east, None, Segment(-82.99, 39.86, -82.95, 40.14, 0.3),
                    ttn.category, "ttn_i71"),
    ]
    human = [SourceAlloc(name, _scale(n, scale)) for name, n in CMH_HUMAN]
    strata = [
        Stratum(RegionClass.IN_TARGET, noise + human),
        Stratum(RegionClass.IN_PARENT_ONLY, _background(_scale(10043, scale)), "leak"),
        Stratum(RegionClass.ELSEWHERE, _background(_scale(236, scale)), "leak"),
    ]
    return CorpusSpec(
        name="columbus-2015-11",
        seed=seed,
        target=target,
        parent=parent,
        strata=strata,
        user_model=_user_model(CMH_USERS, scale, strata),
        near_box=BBox(-90.0, 35.0, -75.0, 45.0),
    )


PRESETS = {
    "san-diego-2015-11": san_diego_2015_11,
    "columbus-2015-11": columbus_2015_11,
}


def preset(name: str, seed: int = 0, scale: float = 1.0) -> CorpusSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(seed=seed, scale=scale)
