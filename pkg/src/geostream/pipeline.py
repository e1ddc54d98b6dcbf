"""End-to-end cleaning: ingest, boundary filter, blacklist removal, user-bias summary, KDE."""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from . import __version__
from ._format import dumps_json
from .geo import PartitionReport, Region, RegionClass, classify_many, load_region, partition_report, streaming_match
from .ingest import CorpusIOError, GeoPolicy, IngestStats, effective_point, read_corpus, resolve_threads, write_corpus
from .kde import DEFAULT_BANDWIDTH, DEFAULT_CELL, export_grid, hotspots, hotspots_csv, kde_points
from .records import BBox, Tweet
from .source_classifier import (
    Blacklist,
    BlacklistError,
    NoiseReport,
    PlatformReport,
    extract_source_name,
    load_blacklist,
    noise_report,
    platform_report,
    remove_noise,
)
from .user_stats import build_frequency, one_per_user, remove_top_users, summarize, unique_user_count

MITIGATIONS = ("none", "remove-top", "one-per-user", "unique-users")
FORMATS = ("csv", "md", "json")
STAGES = ("ingest", "geofilter", "classify", "userstats", "kde")
CORPUS_NAME = "corpus.ndjson"

# fields that do not change results and are left out of the config hash
_VOLATILE = {"out", "threads", "manifest"}


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    target_region: str | None = None
    parent_region: str | None = None
    bbox: str | None = None
    blacklist: str | None = None
    geo_policy: str = GeoPolicy.COORDINATES_THEN_GEO.value
    top_fraction: float = 0.01
    at_most: int = 5
    mitigation: str = "none"
    kde: bool = False
    kde_bandwidth: float = DEFAULT_BANDWIDTH
    kde_cell: float = DEFAULT_CELL
    kde_source: str | None = None
    kde_stage: str = "geofilter"
    top_sources: int | None = None
    formats: list[str] = field(default_factory=lambda: list(FORMATS))
    seed: int | None = None
    out: str | None = None
    threads: int | None = None
    manifest: str | None = None

    def validate(self) -> None:
        """Cheap checks that need no data; file lookups happen in their stage."""
        if not 0 < self.top_fraction < 1:
            raise ValueError(f"top fraction must be in (0, 1), got {self.top_fraction}")
        if self.mitigation not in MITIGATIONS:
            raise ValueError(f"unknown mitigation {self.mitigation!r}")
        GeoPolicy(self.geo_policy)
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise ValueError(f"unknown report formats {sorted(bad)}")
        if self.kde_stage not in STAGES[:4]:
            raise ValueError(f"kde stage must be one of {STAGES[:4]}")
        if self.kde_bandwidth <= 0 or self.kde_cell <= 0:
            raise ValueError("kde bandwidth and cell must be positive")
        if self.target_region is None and self.bbox is None:
            raise ValueError("a target region or a bbox is required")
        if self.bbox is not None:
            BBox.parse(self.bbox)

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in _VOLATILE}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


@dataclass
class StageCount:
    stage: str
    tweets_in: int
    tweets_out: int


@dataclass
class PipelineReport:
    ingest: IngestStats
    partition: PartitionReport | None = None
    noise: NoiseReport | None = None
    platforms: PlatformReport | None = None
    userstats: dict | None = None
    stages: list[StageCount] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    corpus: list[Tweet] = field(default_factory=list, repr=False)
    kde_points: int | None = None

    def to_dict(self, top_sources: int | None = None) -> dict:
        return {
            "ingest": self.ingest.to_dict(),
            "partition": self.partition.to_dict() if self.partition else None,
            "noise": self.noise.to_dict() if self.noise else None,
            "platforms": self.platforms.to_dict(top_sources) if self.platforms else None,
            "userstats": self.userstats,
            "stages": [asdict(s) for s in self.stages],
            "kde_points": self.kde_points,
        }


def resolve_region(ref: str | None, bbox: str | None, name: str) -> Region | None:
    if ref is not None:
        return load_region(ref)
    if bbox is not None:
        return Region.from_bbox(BBox.parse(bbox), name=name)
    return None


def geofilter(
    corpus: Sequence[Tweet],
    target: Region,
    parent: Region | None = None,
    policy: str = GeoPolicy.COORDINATES_THEN_GEO.value,
    bbox: BBox | None = None,
) -> tuple[list[Tweet], PartitionReport]:
    """Keep tweets inside the target boundary; the partition covers the streamed corpus.

    With ``bbox`` the corpus is first narrowed to what the streaming location
    filter would have delivered for that box.
    """
    if bbox is not None:
        corpus = [t for t in corpus if streaming_match(t, bbox)]
    classes = classify_many(corpus, target, parent, policy)
    report = partition_report(corpus, target, parent, policy, classes=classes)
    kept = [t for t, c in zip(corpus, classes) if c is RegionClass.IN_TARGET]
    return kept, report


def user_summary(corpus: Sequence[Tweet], top_fraction: float = 0.01, at_most: int = 5) -> dict:
    """Per-user activity statistics as a dict; all-null percentages for an empty corpus."""
    tbl = build_frequency(corpus)
    if tbl.unique_users == 0:
        return {
            "unique_users": 0, "total_tweets": 0, "pct_users_exactly_1": None, "at_most_n": at_most,
            "pct_users_at_most": None, "top_fraction": top_fraction, "share_of_top": None,
            "max_user_count": 0, "display": {"exactly_1": "–", "at_most": "–", "share_of_top": "–"},
        }
    return summarize(tbl, top_fraction, at_most).to_dict()


def userstats_markdown(d: dict, label: str = "corpus") -> str:
    disp = d["display"]
    return (
        "| | Human Tweets | Human Users | Users with 1 tweet "
        f"| Users with 1-{d['at_most_n']} tweets | Top {d['top_fraction'] * 100:g}% share | Most active user |\n"
        "|---|---:|---:|---:|---:|---:|---:|\n"
        f"| {label} | {d['total_tweets']:,} | {d['unique_users']:,} | {disp['exactly_1']} "
        f"| {disp['at_most']} | {disp['share_of_top']} | {d['max_user_count']} |\n"
    )


def userstats_csv(d: dict) -> str:
    keys = [k for k in d if k not in ("display", "unique_users_by_region")]
    vals = ["" if d[k] is None else str(d[k]) for k in keys]
    return ",".join(keys) + "\n" + ",".join(vals) + "\n"


def mitigate(corpus: list[Tweet], mode: str, top_fraction: float) -> list[Tweet]:
    if mode == "remove-top":
        return remove_top_users(corpus, top_fraction) if corpus else []
    if mode == "one-per-user":
        return one_per_user(corpus)
    return list(corpus)


def write_report(out: Path, stem: str, formats: Sequence[str], *, csv=None, md=None, json_obj=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in formats and csv is not None:
        (out / f"{stem}.csv").write_text(csv, encoding="utf-8")
    if "md" in formats and md is not None:
        (out / f"{stem}.md").write_text(md, encoding="utf-8")
    if "json" in formats and json_obj is not None:
        (out / f"{stem}.json").write_text(dumps_json(json_obj), encoding="utf-8")


def write_partition(out: Path, rep: PartitionReport, formats) -> None:
    write_report(out, "partition", formats, csv=rep.to_csv(), md=rep.to_markdown(), json_obj=rep.to_dict())


def write_noise(out: Path, rep: NoiseReport, formats) -> None:
    write_report(out, "noise", formats, csv=rep.to_csv(), md=rep.to_markdown(), json_obj=rep.to_dict())


def write_platforms(out: Path, rep: PlatformReport, formats, top: int | None = None) -> None:
    write_report(out, "platforms", formats, csv=rep.to_csv(top), md=rep.to_markdown(top), json_obj=rep.to_dict(top))


def write_userstats(out: Path, d: dict, formats, histogram: str) -> None:
    write_report(out, "userstats", formats, csv=userstats_csv(d), md=userstats_markdown(d), json_obj=d)
    (out / "histogram.csv").write_text(histogram, encoding="utf-8")


def select_source(corpus: Sequence[Tweet], source: str | None) -> list[Tweet]:
    if source is None:
        return list(corpus)
    return [t for t in corpus if extract_source_name(t.source_raw) == source]


def run_kde(corpus: Sequence[Tweet], out: Path, bandwidth: float, cell: float,
            policy: str = GeoPolicy.COORDINATES_ONLY.value, source: str | None = None) -> int:
    """Rasterise (optionally one client's) located tweets; returns the point count."""
    pts = [p for t in select_source(corpus, source) if (p := effective_point(t, policy)) is not None]
    out.mkdir(parents=True, exist_ok=True)
    if not pts:
        (out / "hotspots.csv").write_text(hotspots_csv([]), encoding="utf-8")
        return 0
    grid = kde_points(pts, bandwidth, cell)
    export_grid(grid, out / "density.asc")
    (out / "hotspots.csv").write_text(hotspots_csv(hotspots(grid)), encoding="utf-8")
    return len(pts)


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def run_pipeline(cfg: PipelineConfig) -> PipelineReport:
    """Run every stage in order, writing reports as each stage completes.

    A failing stage raises :class:`PipelineError`; reports from the stages
    before it are already on disk.
    """
    try:
        cfg.validate()
    except (ValueError, OSError) as exc:
        raise PipelineError("config", str(exc)) from exc
    out = Path(cfg.out) if cfg.out else None
    fmts = cfg.formats
    threads = resolve_threads(cfg.threads)
    timings: dict[str, float] = {}
    report = PipelineReport(IngestStats())

    def flush_manifest():
        if out is not None:
            write_manifest(out, cfg, report)

    def fail(stage, exc):
        flush_manifest()
        raise PipelineError(stage, str(exc)) from exc

    # ingest
    t0 = time.perf_counter()
    try:
        for p in cfg.inputs:
            if p != "-" and not os.path.exists(p):
                raise FileNotFoundError(f"input not found: {p}")
        corpus, stats = read_corpus(list(cfg.inputs), threads=threads)
    except (OSError, CorpusIOError) as exc:
        fail("ingest", exc)
    report.ingest = stats
    report.stages.append(StageCount("ingest", stats.total_lines, len(corpus)))
    timings["ingest"] = time.perf_counter() - t0
    by_stage = {"ingest": corpus}

    # geofilter
    t0 = time.perf_counter()
    try:
        target = resolve_region(cfg.target_region, cfg.bbox, "target")
        parent = load_region(cfg.parent_region) if cfg.parent_region else None
        box = BBox.parse(cfg.bbox) if cfg.bbox else None
    except (OSError, ValueError) as exc:
        fail("geofilter", exc)
    inside, report.partition = geofilter(corpus, target, parent, cfg.geo_policy, box)
    report.stages.append(StageCount("geofilter", len(corpus), len(inside)))
    timings["geofilter"] = time.perf_counter() - t0
    by_stage["geofilter"] = inside
    if out is not None:
        write_partition(out, report.partition, fmts)

    # classify
    t0 = time.perf_counter()
    if cfg.blacklist is None:
        bl = Blacklist()
    else:
        try:
            bl = load_blacklist(cfg.blacklist)
        except (OSError, BlacklistError) as exc:
            fail("classify", exc)
    report.noise = noise_report(inside, bl)
    report.platforms = platform_report(inside, bl)
    human, _ = remove_noise(inside, bl)
    report.stages.append(StageCount("classify", len(inside), len(human)))
    timings["classify"] = time.perf_counter() - t0
    by_stage["classify"] = human
    if out is not None:
        write_noise(out, report.noise, fmts)
        write_platforms(out, report.platforms, fmts, cfg.top_sources)

    # userstats and mitigation
    t0 = time.perf_counter()
    summary = user_summary(human, cfg.top_fraction, cfg.at_most)
    cleaned = mitigate(human, cfg.mitigation, cfg.top_fraction)
    summary["mitigation"] = cfg.mitigation
    if cfg.mitigation != "none":
        summary["after_mitigation"] = user_summary(cleaned, cfg.top_fraction, cfg.at_most)
    if cfg.mitigation == "unique-users":
        summary["unique_users_by_region"] = {"InTarget": unique_user_count(cleaned)}
    report.userstats = summary
    report.stages.append(StageCount("userstats", len(human), len(cleaned)))
    timings["userstats"] = time.perf_counter() - t0
    by_stage["userstats"] = cleaned
    report.corpus = cleaned
    if out is not None:
        write_userstats(out, summary, fmts, build_frequency(human).histogram_csv())
        write_corpus(cleaned, out / CORPUS_NAME)

    # kde
    if cfg.kde:
        t0 = time.perf_counter()
        try:
            report.kde_points = run_kde(
                by_stage[cfg.kde_stage], out or Path("."), cfg.kde_bandwidth, cfg.kde_cell,
                cfg.geo_policy, cfg.kde_source,
            )
        except (ValueError, OSError) as exc:
            fail("kde", exc)
        timings["kde"] = time.perf_counter() - t0

    report.timings = timings
    if out is not None:
        (out / "report.json").write_text(dumps_json(report.to_dict(cfg.top_sources)), encoding="utf-8")
        write_manifest(out, cfg, report)
        (out / "timings.json").write_text(dumps_json({k: round(v, 6) for k, v in timings.items()}),
                                          encoding="utf-8")
    return report


def write_manifest(out: Path, cfg: PipelineConfig, report: PipelineReport) -> None:
    """manifest.json: seed, config hash, input digests and stage counts (no timings)."""
    inputs = []
    for p in cfg.inputs:
        if p != "-" and os.path.isfile(p):
            inputs.append({"path": os.path.basename(p), "sha256": sha256_file(p)})
    doc = {
        "version": __version__,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash(),
        "config": {k: v for k, v in cfg.to_dict().items() if k not in _VOLATILE and k != "inputs"},
        "inputs": inputs,
        "stages": [asdict(s) for s in report.stages],
    }
    out.mkdir(parents=True, exist_ok=True)
    text = dumps_json(doc)
    (out / "manifest.json").write_text(text, encoding="utf-8")
    if cfg.manifest:
        Path(cfg.manifest).write_text(text, encoding="utf-8")
