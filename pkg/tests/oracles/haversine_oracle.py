"""Great-circle distances for the speed-heuristic fixtures, computed without geostream.

Uses the chord-length formulation on a 6371 km sphere, which is algebraically
independent of the haversine form used by the package.  Run directly to print
the fixture distances.
"""

import math

R_KM = 6371.0

# (lon, lat) pairs, one hour apart in the fixtures
FAST_PAIR = ((-117.0, 32.0), (-117.0, 34.7))
SLOW_PAIR = ((-117.0, 32.0), (-117.0, 32.9))


def _unit(lon, lat):
    lo, la = math.radians(lon), math.radians(lat)
    return (math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la))


def chord_distance_km(a, b):
    ua, ub = _unit(*a), _unit(*b)
    chord = math.dist(ua, ub)
    return 2.0 * R_KM * math.asin(chord / 2.0)


if __name__ == "__main__":
    for name, pair in (("fast", FAST_PAIR), ("slow", SLOW_PAIR)):
        print(f"{name}: {chord_distance_km(*pair):.6f} km")
