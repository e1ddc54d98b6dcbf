"""Command-line entry point: ``geostream <subcommand> ...``.

Every subcommand reads and writes the canonical NDJSON corpus so stages can be
chained through files or pipes.  Exit codes: 64 usage, 65 bad data, 66 I/O,
2 for a failed ``report`` stage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._format import dumps_json
from .geo import GeometryError, load_region
from .ingest import CorpusIOError, GeoPolicy, read_corpus, resolve_threads, write_corpus, write_stats_line
from .kde import DEFAULT_BANDWIDTH, DEFAULT_CELL
from .pipeline import (
    FORMATS,
    MITIGATIONS,
    PipelineConfig,
    PipelineError,
    geofilter,
    mitigate,
    resolve_region,
    run_kde,
    run_pipeline,
    user_summary,
    userstats_csv,
    userstats_markdown,
    write_noise,
    write_partition,
    write_platforms,
    write_userstats,
)
from .records import BBox
from .source_classifier import BlacklistError, load_blacklist, noise_report, platform_report, remove_noise
from .user_stats import EmptyTableError, build_frequency

EX_USAGE, EX_DATAERR, EX_NOINPUT = 64, 65, 66
EX_STAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _formats(text: str) -> list[str]:
    out = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in out if f not in FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(bad)}")
    return out


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("fraction must be in (0, 1)")
    return v


def _add_io(p, corpus_out=True):
    p.add_argument("--input", "-i", nargs="+", default=None, help="NDJSON corpus files ('-' for stdin)")
    if corpus_out:
        p.add_argument("--output", "-o", default="-", help="corpus destination ('-' for stdout)")
    p.add_argument("--out", help="directory for reports")
    p.add_argument("--format", type=_formats, default=list(FORMATS), help="report formats, e.g. csv,md,json")
    p.add_argument("--threads", type=int, default=None)


def _add_region(p):
    p.add_argument("--target-region", help="GeoJSON file or preset name")
    p.add_argument("--parent-region", help="GeoJSON file or preset name")
    p.add_argument("--bbox", help="filter box w,s,e,n")
    p.add_argument("--geo-policy", choices=[g.value for g in GeoPolicy], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geostream", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse, deduplicate and normalise NDJSON")
    _add_io(p)

    p = sub.add_parser("geofilter", help="keep tweets inside the target boundary")
    _add_io(p)
    _add_region(p)
    p.add_argument("--report", choices=FORMATS, default="md")

    p = sub.add_parser("classify", help="remove blacklisted bot sources")
    _add_io(p)
    p.add_argument("--blacklist", required=True, help="CSV file or preset name")
    p.add_argument("--report", choices=FORMATS, default="md")
    p.add_argument("--top-sources", type=int, default=None)

    p = sub.add_parser("userstats", help="per-user activity summary and mitigation")
    _add_io(p)
    p.add_argument("--top-fraction", type=_fraction, default=0.01)
    p.add_argument("--at-most", type=int, default=5)
    p.add_argument("--mitigation", choices=MITIGATIONS, default="none")
    p.add_argument("--report", choices=FORMATS, default="md")

    p = sub.add_parser("kde", help="quartic kernel density raster")
    _add_io(p, corpus_out=False)
    p.add_argument("--filter-source", help="only rasterise tweets from this client")
    p.add_argument("--kde-bandwidth", type=float, default=DEFAULT_BANDWIDTH)
    p.add_argument("--kde-cell", type=float, default=DEFAULT_CELL)
    p.add_argument("--geo-policy", choices=[g.value for g in GeoPolicy], default=GeoPolicy.COORDINATES_ONLY.value)

    p = sub.add_parser("synth", help="generate a calibrated synthetic corpus")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help="san-diego-2015-11 or columbus-2015-11")
    src.add_argument("--spec", help="JSON manifest describing the corpus")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--output", "-o", default="-")
    p.add_argument("--labels", help="write ground-truth labels CSV here")

    for name in ("report", "run"):
        p = sub.add_parser(name, help="run the whole cleaning pipeline")
        p.add_argument("--config", help="JSON config; flags override its values")
        p.add_argument("--input", "-i", nargs="+", default=None)
        _add_region(p)
        p.add_argument("--blacklist")
        p.add_argument("--top-fraction", type=_fraction, default=None)
        p.add_argument("--mitigation", choices=MITIGATIONS, default=None)
        p.add_argument("--kde", action="store_true", default=None, help="also write a density raster")
        p.add_argument("--kde-bandwidth", type=float, default=None)
        p.add_argument("--kde-cell", type=float, default=None)
        p.add_argument("--kde-stage", choices=("ingest", "geofilter", "classify", "userstats"), default=None)
        p.add_argument("--filter-source", dest="kde_source", default=None)
        p.add_argument("--top-sources", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", dest="formats", type=_formats, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--manifest", default=None, help="extra copy of manifest.json")
    return parser


def _emit(text: str, corpus_to_stdout: bool) -> None:
    (sys.stderr if corpus_to_stdout else sys.stdout).write(text)


def _render(rep, kind: str) -> str:
    if kind == "json":
        return dumps_json(rep.to_dict())
    return rep.to_csv() if kind == "csv" else rep.to_markdown()


def _read(args):
    corpus, stats = read_corpus(args.input or ["-"], threads=resolve_threads(args.threads))
    write_stats_line(stats)
    return corpus


def cmd_ingest(args) -> int:
    corpus = _read(args)
    write_corpus(corpus, args.output)
    return 0


def cmd_geofilter(args) -> int:
    if args.target_region is None and args.bbox is None:
        raise UsageError("geofilter needs --target-region or --bbox")
    target = resolve_region(args.target_region, args.bbox, "target")
    parent = load_region(args.parent_region) if args.parent_region else None
    box = BBox.parse(args.bbox) if args.bbox else None
    policy = args.geo_policy or GeoPolicy.COORDINATES_THEN_GEO.value
    corpus = _read(args)
    kept, rep = geofilter(corpus, target, parent, policy, box)
    write_corpus(kept, args.output)
    if args.out:
        write_partition(Path(args.out), rep, args.format)
    _emit(_render(rep, args.report), args.output == "-")
    return 0


def cmd_classify(args) -> int:
    bl = load_blacklist(args.blacklist)
    corpus = _read(args)
    nrep = noise_report(corpus, bl)
    prep = platform_report(corpus, bl)
    kept, _ = remove_noise(corpus, bl)
    write_corpus(kept, args.output)
    if args.out:
        write_noise(Path(args.out), nrep, args.format)
        write_platforms(Path(args.out), prep, args.format, args.top_sources)
    text = _render(nrep, args.report)
    if args.top_sources:
        text += "\n" + (dumps_json(prep.to_dict(args.top_sources)) if args.report == "json" else
                        prep.to_csv(args.top_sources) if args.report == "csv" else
                        prep.to_markdown(args.top_sources))
    _emit(text, args.output == "-")
    return 0


def cmd_userstats(args) -> int:
    corpus = _read(args)
    summary = user_summary(corpus, args.top_fraction, args.at_most)
    cleaned = mitigate(corpus, args.mitigation, args.top_fraction)
    summary["mitigation"] = args.mitigation
    if args.mitigation != "none":
        summary["after_mitigation"] = user_summary(cleaned, args.top_fraction, args.at_most)
    if args.mitigation == "unique-users":
        summary["unique_users_by_region"] = {"InTarget": len({t.user_id for t in cleaned})}
    write_corpus(cleaned, args.output)
    if args.out:
        write_userstats(Path(args.out), summary, args.format, build_frequency(corpus).histogram_csv())
    text = {"json": dumps_json, "csv": userstats_csv, "md": userstats_markdown}[args.report](summary)
    _emit(text, args.output == "-")
    return 0


def cmd_kde(args) -> int:
    corpus = _read(args)
    out = Path(args.out or ".")
    n = run_kde(corpus, out, args.kde_bandwidth, args.kde_cell, args.geo_policy, args.filter_source)
    sys.stdout.write(json.dumps({"points": n, "raster": str(out / "density.asc") if n else None}) + "\n")
    return 0


def cmd_synth(args) -> int:
    from .synth import generate, load_manifest, preset

    if args.preset:
        try:
            spec = preset(args.preset, seed=args.seed or 0, scale=args.scale)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    else:
        spec = load_manifest(args.spec, seed=args.seed)
    corpus = generate(spec)
    corpus.write(args.output)
    if args.labels:
        Path(args.labels).write_text(corpus.labels_csv(), encoding="utf-8")
    return 0


def cmd_report(args) -> int:
    base: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
    overrides = {
        "inputs": args.input,
        "target_region": args.target_region,
        "parent_region": args.parent_region,
        "bbox": args.bbox,
        "blacklist": args.blacklist,
        "geo_policy": args.geo_policy,
        "top_fraction": args.top_fraction,
        "mitigation": args.mitigation,
        "kde": args.kde,
        "kde_bandwidth": args.kde_bandwidth,
        "kde_cell": args.kde_cell,
        "kde_stage": args.kde_stage,
        "kde_source": args.kde_source,
        "top_sources": args.top_sources,
        "out": args.out,
        "formats": args.formats,
        "seed": args.seed,
        "threads": args.threads,
        "manifest": args.manifest,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.kde_source and "kde" not in base:
        base["kde"] = True
    base.setdefault("out", "geostream-out")
    try:
        cfg = PipelineConfig.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if not cfg.inputs:
        raise UsageError("report needs --input (or inputs in --config)")
    try:
        rep = run_pipeline(cfg)
    except PipelineError as exc:
        sys.stderr.write(f"geostream: stage {exc.stage} failed: {exc}\n")
        return EX_STAGE
    out = []
    out.append(rep.partition.to_markdown())
    out.append(rep.noise.to_markdown())
    if cfg.top_sources:
        out.append(rep.platforms.to_markdown(cfg.top_sources))
    out.append(userstats_markdown(rep.userstats))
    sys.stdout.write("\n".join(out))
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "geofilter": cmd_geofilter,
    "classify": cmd_classify,
    "userstats": cmd_userstats,
    "kde": cmd_kde,
    "synth": cmd_synth,
    "report": cmd_report,
    "run": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"geostream: {exc}\n")
        return EX_USAGE
    except (CorpusIOError, OSError) as exc:
        sys.stderr.write(f"geostream: {exc}\n")
        return EX_NOINPUT
    except (BlacklistError, GeometryError, EmptyTableError, json.JSONDecodeError, ValueError, KeyError) as exc:
        sys.stderr.write(f"geostream: {exc}\n")
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
