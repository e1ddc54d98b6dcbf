"""Constructive per-user tweet-count allocation matching target activity statistics."""

from __future__ import annotations

import math
from typing import Sequence

from .._format import round_half_up
from ..user_stats import top_user_count


class Infeasible(ValueError):
    """The requested activity statistics cannot be met; ``constraint`` names the first violated one."""

    def __init__(self, constraint: str, detail: str):
        super().__init__(f"infeasible {constraint}: {detail}")
        self.constraint = constraint


def _nearest(x: float) -> int:
    return int(round_half_up(x))


def fill_counts(n: int, total: int, lo: int, hi: int, weights: Sequence[float] | None = None) -> list[int]:
    """``n`` integers in ``[lo, hi]`` summing to ``total``, shaped like ``weights``.

    Each value is ``lo + s * w_i`` clipped to ``hi`` for a scale ``s`` found by
    bisection, then rounded by largest remainder.  Returned in descending order.
    """
    if n == 0:
        if total != 0:
            raise ValueError("cannot place tweets on zero users")
        return []
    if not n * lo <= total <= n * hi:
        raise ValueError(f"{total} not within [{n * lo}, {n * hi}]")
    if weights is None:
        weights = [1.0 / (i + 1) for i in range(n)]
    span = hi - lo
    extra = total - n * lo

    def mass(s):
        return sum(min(span, s * w) for w in weights)

    a, b = 0.0, 1.0
    while mass(b) < extra:
        b *= 2.0
    for _ in range(200):
        mid = (a + b) / 2
        if mass(mid) < extra:
            a = mid
        else:
            b = mid
    real = [min(span, b * w) for w in weights]
    base = [int(math.floor(r)) for r in real]
    short = extra - sum(base)
    order = sorted(range(n), key=lambda i: (-(real[i] - base[i]), i))
    j = 0
    while short > 0:
        i = order[j % n]
        if base[i] < span:
            base[i] += 1
            short -= 1
        j += 1
    while short < 0:
        i = order[-1 - (j % n)]
        if base[i] > 0:
            base[i] -= 1
            short += 1
        j += 1
    return sorted((lo + c for c in base), reverse=True)


def solve_user_counts(
    unique_users: int,
    total_tweets: int,
    pct_exactly_1: float,
    top1pct_share: float,
    max_count: int,
    pct_at_most: float | None = None,
    at_most: int = 5,
    top_fraction: float = 0.01,
) -> list[int]:
    """Per-user tweet counts (descending) reproducing the given summary statistics.

    Shares are fractions in [0, 1].  The most active ``ceil(top_fraction * U)``
    users hold ``round(top1pct_share * T)`` tweets with a Zipf-like decay from
    ``max_count``; ``round(pct_exactly_1 * U)`` users have exactly one tweet;
    when ``pct_at_most`` is given, ``round(pct_at_most * U)`` users have at most
    ``at_most`` tweets.  Raises :class:`Infeasible` when the arithmetic cannot close.
    """
    U, T = int(unique_users), int(total_tweets)
    if U < 1:
        raise Infeasible("unique_users", "need at least one user")
    if T < U:
        raise Infeasible("total_tweets", f"{T} tweets cannot cover {U} users")
    for name, v in (("pct_exactly_1", pct_exactly_1), ("top1pct_share", top1pct_share)):
        if not 0.0 <= v <= 1.0:
            raise Infeasible(name, f"{v} is not a fraction in [0, 1]")

    n1 = _nearest(pct_exactly_1 * U)
    if n1 == U:
        # everyone tweeted once; the top share is implied by U alone
        if T != U:
            raise Infeasible("total_tweets", "all users single-tweet but total != unique_users")
        if max_count != 1:
            raise Infeasible("max_count", "all users single-tweet but max_count != 1")
        return [1] * U
    if max_count < 2:
        raise Infeasible("max_count", "max_count must be >= 2 when some user tweets more than once")

    k = top_user_count(U, top_fraction)
    top_total = _nearest(top1pct_share * T)
    if k > U - n1:
        raise Infeasible("top1pct_share", f"top cohort of {k} exceeds {U - n1} multi-tweet users")
    if top_total < max_count:
        raise Infeasible("top1pct_share", f"top share {top_total} tweets is below max_count {max_count}")
    rest_top = top_total - max_count
    if k == 1 and rest_top != 0:
        raise Infeasible("top1pct_share", "single top user must hold exactly the top share")

    remaining = T - n1 - top_total
    if pct_at_most is not None:
        n_small = _nearest(pct_at_most * U)
        m_small = n_small - n1
        m_big = U - n_small - k
        if m_small < 0 or m_big < 0:
            raise Infeasible("pct_at_most", f"{n_small} users <= {at_most} conflicts with other cohorts")
        small_lo, small_hi, big_lo = 2, at_most, at_most + 1
    else:
        m_small, m_big = 0, U - n1 - k
        small_lo = small_hi = 2
        big_lo = 2

    avg_top = rest_top / (k - 1) if k > 1 else max_count
    caps = range(big_lo if m_big else small_hi, min(max_count - 1, int(avg_top)) + 1)
    caps = sorted(caps, key=lambda c: (abs(c - avg_top / 2), c))
    for cap in caps:
        if k > 1 and not (k - 1) * cap <= rest_top <= (k - 1) * (max_count - 1):
            continue
        lo_mid = m_small * small_lo + m_big * big_lo
        hi_mid = m_small * small_hi + m_big * cap
        if not lo_mid <= remaining <= hi_mid:
            continue
        # small cohort aims for a mean near 2.8 tweets, big cohort takes the rest
        s_small = min(max(_nearest(2.8 * m_small), m_small * small_lo), m_small * small_hi)
        s_small = min(max(s_small, remaining - m_big * cap), remaining - m_big * big_lo)
        top = fill_counts(k - 1, rest_top, cap, max_count - 1)
        small = fill_counts(m_small, s_small, small_lo, small_hi)
        big = fill_counts(m_big, remaining - s_small, big_lo, cap)
        counts = sorted([max_count] + top + big + small + [1] * n1, reverse=True)
        assert len(counts) == U and sum(counts) == T
        return counts

    if k > 1 and (k - 1) * (max_count - 1) < rest_top:
        raise Infeasible("max_count", f"top cohort cannot hold {rest_top} tweets below {max_count}")
    if pct_at_most is not None:
        raise Infeasible("pct_at_most", f"cannot place {remaining} tweets on the middle cohorts")
    raise Infeasible("total_tweets", f"cannot place {remaining} tweets on {U - n1 - k} middle users")
