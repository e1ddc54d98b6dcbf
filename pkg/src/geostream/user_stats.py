"""Per-user activity statistics, bias mitigation transforms and bot heuristics."""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Mapping, Sequence

from ._format import round_half_up
from .records import Tweet

EARTH_RADIUS_KM = 6371.0

_NEVER = datetime.max.replace(tzinfo=timezone.utc)


class EmptyTableError(ValueError):
    """Statistics were requested for a corpus without users."""


@dataclass(frozen=True)
class UserFrequencyTable:
    counts: Mapping[int, int]
    total_tweets: int
    unique_users: int

    def ranked(self) -> list[tuple[int, int]]:
        """(user_id, count) pairs, most active first; ties go to the smaller id."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def histogram(self) -> list[tuple[int, int]]:
        """(tweets_per_user, count_of_users) pairs in ascending tweets_per_user."""
        return sorted(Counter(self.counts.values()).items())

    def histogram_csv(self) -> str:
        lines = ["tweets_per_user,count_of_users"]
        lines += [f"{k},{v}" for k, v in self.histogram()]
        return "\n".join(lines) + "\n"


def build_frequency(corpus: Iterable[Tweet]) -> UserFrequencyTable:
    counts = Counter(t.user_id for t in corpus)
    return UserFrequencyTable(dict(counts), sum(counts.values()), len(counts))


def top_user_count(unique_users: int, fraction: float) -> int:
    # round() strips float noise such as 0.07 * 100 == 7.000000000000001
    return math.ceil(round(fraction * unique_users, 9))


def top_users(tbl: UserFrequencyTable, fraction: float) -> list[int]:
    k = top_user_count(tbl.unique_users, fraction)
    return [uid for uid, _ in tbl.ranked()[:k]]


def share_of_top(tbl: UserFrequencyTable, fraction: float) -> float:
    """Percent of all tweets written by the top ``fraction`` of users."""
    if tbl.unique_users == 0:
        raise EmptyTableError("empty frequency table")
    k = top_user_count(tbl.unique_users, fraction)
    top = sum(c for _, c in tbl.ranked()[:k])
    return 100.0 * top / tbl.total_tweets


@dataclass(frozen=True)
class FrequencySummary:
    unique_users: int
    total_tweets: int
    pct_users_exactly_1: float
    at_most_n: int
    pct_users_at_most: float
    top_fraction: float
    share_of_top: float
    max_user_count: int

    def to_dict(self) -> dict:
        return {
            "unique_users": self.unique_users,
            "total_tweets": self.total_tweets,
            "pct_users_exactly_1": round_half_up(self.pct_users_exactly_1, 2),
            "at_most_n": self.at_most_n,
            "pct_users_at_most": round_half_up(self.pct_users_at_most, 2),
            "top_fraction": self.top_fraction,
            "share_of_top": round_half_up(self.share_of_top, 2),
            "max_user_count": self.max_user_count,
            "display": {
                "exactly_1": f"{round_half_up(self.pct_users_exactly_1):.0f}%",
                "at_most": f"{round_half_up(self.pct_users_at_most, 2):.2f}%",
                "share_of_top": f"{round_half_up(self.share_of_top):.0f}%",
            },
        }

    def to_markdown(self, label: str = "corpus") -> str:
        d = self.to_dict()["display"]
        return (
            "| | Human Tweets | Human Users | Users with 1 tweet "
            f"| Users with 1-{self.at_most_n} tweets | Top {self.top_fraction:.0%} share | Most active user |\n"
            "|---|---:|---:|---:|---:|---:|---:|\n"
            f"| {label} | {self.total_tweets:,} | {self.unique_users:,} | {d['exactly_1']} "
            f"| {d['at_most']} | {d['share_of_top']} | {self.max_user_count} |\n"
        )

    def to_csv(self) -> str:
        d = self.to_dict()
        keys = [k for k in d if k != "display"]
        return ",".join(keys) + "\n" + ",".join(str(d[k]) for k in keys) + "\n"


def summarize(tbl: UserFrequencyTable, top_fraction: float = 0.01, at_most: int = 5) -> FrequencySummary:
    if tbl.unique_users == 0:
        raise EmptyTableError("cannot summarize an empty frequency table")
    values = tbl.counts.values()
    ones = sum(1 for c in values if c == 1)
    small = sum(1 for c in values if c <= at_most)
    return FrequencySummary(
        unique_users=tbl.unique_users,
        total_tweets=tbl.total_tweets,
        pct_users_exactly_1=100.0 * ones / tbl.unique_users,
        at_most_n=at_most,
        pct_users_at_most=100.0 * small / tbl.unique_users,
        top_fraction=top_fraction,
        share_of_top=share_of_top(tbl, top_fraction),
        max_user_count=max(values),
    )


def remove_top_users(corpus: Sequence[Tweet], fraction: float) -> list[Tweet]:
    """Drop every tweet written by the top ``fraction`` most active users."""
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    tbl = build_frequency(corpus)
    if tbl.unique_users == 0:
        return list(corpus)
    drop = set(top_users(tbl, fraction))
    return [t for t in corpus if t.user_id not in drop]


def one_per_user(corpus: Sequence[Tweet]) -> list[Tweet]:
    """Keep each user's earliest tweet (smallest id on equal timestamps), in input order."""
    best: dict[int, Tweet] = {}
    for t in corpus:
        cur = best.get(t.user_id)
        if cur is None or _age_key(t) < _age_key(cur):
            best[t.user_id] = t
    keep = {id(t) for t in best.values()}
    return [t for t in corpus if id(t) in keep]


def _age_key(t: Tweet):
    return (t.created_at or _NEVER, t.id)


def unique_user_count(corpus: Sequence[Tweet], classes: Sequence | None = None):
    """Distinct users overall, or per class label when ``classes`` is given."""
    if classes is None:
        return len({t.user_id for t in corpus})
    per: dict = defaultdict(set)
    for t, cls in zip(corpus, classes, strict=True):
        per[cls].add(t.user_id)
    return {cls: len(users) for cls, users in per.items()}


def haversine_km(lon1: float, lat1: float, lon2: float, lat2: float) -> float:
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dphi = p2 - p1
    dlmb = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def speed_flag(corpus: Iterable[Tweet], threshold_kmh: float = 120.0) -> set[int]:
    """Users whose consecutive located tweets imply travel faster than the threshold."""
    tracks: dict[int, list[Tweet]] = defaultdict(list)
    for t in corpus:
        if t.coordinates is not None and t.created_at is not None:
            tracks[t.user_id].append(t)
    flagged = set()
    for uid, pts in tracks.items():
        if len(pts) < 2:
            continue
        pts.sort(key=lambda t: (t.created_at, t.id))
        for a, b in zip(pts, pts[1:]):
            dist = haversine_km(a.coordinates.lon, a.coordinates.lat,
                                b.coordinates.lon, b.coordinates.lat)
            hours = (b.created_at - a.created_at).total_seconds() / 3600.0
            if hours == 0:
                if dist > 0:
                    flagged.add(uid)
                    break
                continue
            if dist / hours > threshold_kmh:
                flagged.add(uid)
                break
    return flagged


def url_rate_flag(corpus: Iterable[Tweet], threshold: float = 0.70, min_tweets: int = 2) -> set[int]:
    """Users whose share of URL-bearing tweets is strictly above ``threshold``."""
    total: Counter = Counter()
    with_url: Counter = Counter()
    for t in corpus:
        total[t.user_id] += 1
        if t.urls_count >= 1:
            with_url[t.user_id] += 1
    return {
        uid for uid, n in total.items()
        if n >= min_tweets and with_url[uid] / n > threshold
    }

