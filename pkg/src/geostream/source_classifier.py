"""Bot/cyborg detection from the ``source`` metadata field.

A blacklist maps exact client names (optionally conditioned on a hashtag) to a
noise category.  Anything not blacklisted is either one of the generic official
Twitter clients or a third-party platform.
"""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from ._format import fmt_pct
from .records import Tweet

GENERIC_CLIENTS = frozenset({"Twitter for iPhone", "Twitter for Android", "Twitter Web Client"})

BLACKLIST_PRESETS = {
    "san-diego-2015-11": "san_diego_2015_11.csv",
    "san_diego_2015_11": "san_diego_2015_11.csv",
    "columbus-2015-11": "columbus_2015_11.csv",
    "columbus_2015_11": "columbus_2015_11.csv",
}

_ANCHOR_RE = re.compile(r"^\s*<a\b[^>]*>(.*?)</a>\s*$", re.DOTALL | re.IGNORECASE)
_ENTITIES = {"&amp;": "&", "&lt;": "<", "&gt;": ">", "&quot;": '"'}
_ENTITY_RE = re.compile("|".join(map(re.escape, _ENTITIES)))


class BlacklistError(ValueError):
    """Invalid blacklist file contents."""


class Category(str, Enum):
    JOB = "Job"
    ADVERTISEMENT = "Advertisement"
    WEATHER = "Weather"
    EARTHQUAKE = "Earthquake"
    NEWS = "News"
    TRAFFIC = "Traffic"


@dataclass(frozen=True)
class BlacklistEntry:
    category: Category
    source_name: str
    required_hashtag: str | None = None

    def __post_init__(self):
        if not self.source_name:
            raise BlacklistError("empty source_name")
        if self.required_hashtag is not None:
            tag = self.required_hashtag.lstrip("#")
            if not tag:
                raise BlacklistError(f"empty hashtag for {self.source_name!r}")
            object.__setattr__(self, "required_hashtag", tag)

    @property
    def key(self) -> tuple[str, str | None]:
        return (self.source_name, self.required_hashtag)


@dataclass(frozen=True)
class Noise:
    category: Category
    entry: BlacklistEntry | None = field(default=None, compare=False)
    color = "red"


@dataclass(frozen=True)
class GenericClient:
    color = "green"


@dataclass(frozen=True)
class ThirdParty:
    source_name: str
    color = "blue"


ClientClass = Noise | GenericClient | ThirdParty


@lru_cache(maxsize=65536)
def extract_source_name(raw: str) -> str:
    """Display name of the posting client.

    >>> extract_source_name('<a href="http://instagram.com" rel="nofollow">Instagram</a>')
    'Instagram'
    """
    m = _ANCHOR_RE.match(raw)
    if m is None:
        return raw.strip()
    return _ENTITY_RE.sub(lambda e: _ENTITIES[e.group(0)], m.group(1)).strip()


class Blacklist:
    """Ordered, immutable list of blacklist entries for one city."""

    def __init__(self, entries: Iterable[BlacklistEntry] = (), city_label: str = "",
                 generic_clients: Iterable[str] = GENERIC_CLIENTS):
        self.entries: tuple[BlacklistEntry, ...] = tuple(entries)
        self.city_label = city_label
        self.generic_clients = frozenset(generic_clients)
        seen = set()
        for e in self.entries:
            if e.key in seen:
                raise BlacklistError(f"duplicate entry {e.key!r}")
            seen.add(e.key)
        self._by_name: dict[str, list[BlacklistEntry]] = {}
        for e in self.entries:
            self._by_name.setdefault(e.source_name, []).append(e)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def categories(self) -> set[Category]:
        return {e.category for e in self.entries}

    def match(self, name: str, hashtags: Sequence[str]) -> BlacklistEntry | None:
        candidates = self._by_name.get(name)
        if not candidates:
            return None
        lowered = None
        for e in candidates:
            if e.required_hashtag is None:
                return e
            if lowered is None:
                lowered = {h.lower() for h in hashtags}
            if e.required_hashtag.lower() in lowered:
                return e
        return None

    def with_entry(self, entry: BlacklistEntry) -> "Blacklist":
        return Blacklist(self.entries + (entry,), self.city_label, self.generic_clients)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "source_name", "required_hashtag"])
        for e in self.entries:
            w.writerow([e.category.value, e.source_name, e.required_hashtag or ""])
        return buf.getvalue()


def parse_blacklist(text: str, city_label: str = "") -> Blacklist:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        return Blacklist((), city_label)
    header = [c.strip() for c in rows[0]]
    if header[:2] != ["category", "source_name"]:
        raise BlacklistError(f"bad header {rows[0]!r}; expected category,source_name,required_hashtag")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        row = row + [""] * (3 - len(row))
        cat, name, tag = row[0].strip(), row[1], row[2].strip()
        try:
            category = Category(cat)
        except ValueError:
            raise BlacklistError(f"line {lineno}: unknown category {cat!r}") from None
        if not name.strip():
            raise BlacklistError(f"line {lineno}: empty source_name")
        entries.append(BlacklistEntry(category, name.strip(), tag or None))
    return Blacklist(entries, city_label)


def _preset_file(key: str) -> str | None:
    if key in BLACKLIST_PRESETS:
        return BLACKLIST_PRESETS[key]
    stem = Path(key).name.lower().removesuffix(".csv").replace("-", "_")
    for fname in sorted(set(BLACKLIST_PRESETS.values())):
        if fname.removesuffix(".csv").startswith(stem):
            return fname
    return None


def load_blacklist(source: str | Path) -> Blacklist:
    """Load a blacklist CSV from a path, falling back to the bundled presets.

    ``columbus``, ``columbus.csv`` and ``columbus-2015-11`` all resolve to the
    bundled Columbus list when no such file exists.  Raises FileNotFoundError
    when nothing matches and BlacklistError on invalid rows.
    """
    key = str(source)
    if not Path(key).is_file():
        fname = _preset_file(key)
        if fname is None:
            raise FileNotFoundError(f"blacklist not found: {key}")
        ref = resources.files("geostream") / "data" / "blacklists" / fname
        return parse_blacklist(ref.read_text(encoding="utf-8"), fname.removesuffix(".csv"))
    with open(key, encoding="utf-8") as fh:
        return parse_blacklist(fh.read(), Path(key).stem)


def classify_source(t: Tweet, bl: Blacklist) -> ClientClass:
    name = extract_source_name(t.source_raw)
    entry = bl.match(name, t.hashtags)
    if entry is not None:
        return Noise(entry.category, entry)
    if name in bl.generic_clients:
        return GenericClient()
    return ThirdParty(name)


def remove_noise(corpus: Iterable[Tweet], bl: Blacklist) -> tuple[list[Tweet], int]:
    """Split off blacklisted tweets; returns (kept tweets, number removed)."""
    kept = []
    removed = 0
    for t in corpus:
        if bl.match(extract_source_name(t.source_raw), t.hashtags) is None:
            kept.append(t)
        else:
            removed += 1
    return kept, removed


def _pct(n, total):
    return fmt_pct(n, total, 2)


@dataclass
class NoiseReport:
    corpus_size: int
    entry_counts: dict[BlacklistEntry, int]
    blacklist: Blacklist

    @property
    def noise_tweets(self) -> int:
        return sum(self.entry_counts.values())

    @property
    def noise_percent(self) -> str:
        return _pct(self.noise_tweets, self.corpus_size)

    def category_counts(self) -> dict[Category, int]:
        out: dict[Category, int] = {}
        for e, n in self.entry_counts.items():
            out[e.category] = out.get(e.category, 0) + n
        return out

    def category_percent(self, cat: Category) -> str:
        return _pct(self.category_counts().get(cat, 0), self.corpus_size)

    def grouped(self) -> list[tuple[Category, int, list[tuple[BlacklistEntry, int]]]]:
        """Categories with hits, descending by subtotal, each with its source rows."""
        order = {e: i for i, e in enumerate(self.blacklist.entries)}
        cats = self.category_counts()
        cat_order = list(Category)
        groups = []
        for cat in sorted(
            (c for c, n in cats.items() if n > 0), key=lambda c: (-cats[c], cat_order.index(c))
        ):
            rows = [(e, n) for e, n in self.entry_counts.items() if e.category is cat and n > 0]
            rows.sort(key=lambda r: (-r[1], order[r[0]]))
            groups.append((cat, cats[cat], rows))
        return groups

    def to_dict(self) -> dict:
        return {
            "city": self.blacklist.city_label,
            "corpus_size": self.corpus_size,
            "noise_tweets": self.noise_tweets,
            "noise_percent": self.noise_percent,
            "categories": [
                {
                    "category": cat.value,
                    "count": n,
                    "percent": _pct(n, self.corpus_size),
                    "sources": [
                        {
                            "source_name": e.source_name,
                            "hashtag": e.required_hashtag,
                            "count": c,
                        }
                        for e, c in rows
                    ],
                }
                for cat, n, rows in self.grouped()
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "source_name", "hashtag", "count", "percent"])
        for cat, n, rows in self.grouped():
            for e, c in rows:
                w.writerow([cat.value, e.source_name, e.required_hashtag or "", c, ""])
            w.writerow([cat.value, "Total", "", n, _pct(n, self.corpus_size)])
        w.writerow(["", "Percentage of Noise", "", self.noise_tweets, self.noise_percent])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            "| Source category | Source name | Hashtag | Tweet number | Percentage |",
            "|---|---|---|---:|---:|",
        ]
        for cat, n, rows in self.grouped():
            for i, (e, c) in enumerate(rows):
                label = cat.value if i == 0 else ""
                lines.append(f"| {label} | {_md(e.source_name)} | {e.required_hashtag or ''} | {c} | |")
            lines.append(f"| Total | | | {n} | {_pct(n, self.corpus_size)} |")
        lines.append(f"| | | Percentage of Noise: | | {self.noise_percent} |")
        return "\n".join(lines) + "\n"


def _md(text: str) -> str:
    return text.replace("|", "\\|")


def noise_report(corpus: Iterable[Tweet], bl: Blacklist) -> NoiseReport:
    counts = {e: 0 for e in bl.entries}
    size = 0
    for t in corpus:
        size += 1
        e = bl.match(extract_source_name(t.source_raw), t.hashtags)
        if e is not None:
            counts[e] += 1
    return NoiseReport(size, counts, bl)


@dataclass(frozen=True)
class PlatformRow:
    source_name: str
    count: int
    kind: str
    color: str
    category: str | None = None


@dataclass
class PlatformReport:
    rows: list[PlatformRow]
    corpus_size: int

    def top(self, n: int | None = None) -> list[PlatformRow]:
        return self.rows if n is None else self.rows[:n]

    def to_dict(self, top: int | None = None) -> dict:
        return {
            "corpus_size": self.corpus_size,
            "platforms": [
                {
                    "rank": i + 1,
                    "source_name": r.source_name,
                    "count": r.count,
                    "percent": _pct(r.count, self.corpus_size),
                    "class": r.kind,
                    "category": r.category,
                    "color": r.color,
                }
                for i, r in enumerate(self.top(top))
            ],
        }

    def to_csv(self, top: int | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "source_name", "count", "percent", "class", "category", "color"])
        for i, r in enumerate(self.top(top)):
            w.writerow([i + 1, r.source_name, r.count, _pct(r.count, self.corpus_size),
                        r.kind, r.category or "", r.color])
        return buf.getvalue()

    def to_markdown(self, top: int | None = None) -> str:
        lines = ["| Rank | Source | Tweets | Percentage | Class |", "|---:|---|---:|---:|---|"]
        for i, r in enumerate(self.top(top)):
            cls = f"{r.kind} ({r.category})" if r.category else r.kind
            lines.append(
                f"| {i + 1} | {_md(r.source_name)} | {r.count} | {_pct(r.count, self.corpus_size)} | {cls} |"
            )
        return "\n".join(lines) + "\n"


def platform_report(corpus: Iterable[Tweet], bl: Blacklist) -> PlatformReport:
    """Tweets per client name, tagged noise / generic / third party.

    A name that is only blacklisted under a hashtag condition can show up twice,
    once as noise and once as a third-party platform.
    """
    tally: Counter = Counter()
    size = 0
    for t in corpus:
        size += 1
        cls = classify_source(t, bl)
        if isinstance(cls, Noise):
            key = (cls.entry.source_name, "Noise", cls.category.value)
        elif isinstance(cls, GenericClient):
            key = (extract_source_name(t.source_raw), "GenericClient", None)
        else:
            key = (cls.source_name, "ThirdParty", None)
        tally[key] += 1
    colors = {"Noise": "red", "GenericClient": "green", "ThirdParty": "blue"}
    rows = [
        PlatformRow(name, n, kind, colors[kind], cat)
        for (name, kind, cat), n in tally.items()
    ]
    rows.sort(key=lambda r: (-r.count, r.source_name, r.kind))
    return PlatformReport(rows, size)
