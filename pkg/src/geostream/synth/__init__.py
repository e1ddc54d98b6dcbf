"""Synthetic corpora calibrated to reference counts, plus a matcher oracle."""

from .generator import (
    CorpusSpec,
    Disc,
    GeneratedCorpus,
    Segment,
    SourceAlloc,
    SpecError,
    Stratum,
    Uniform,
    UserConstraints,
    generate,
    load_manifest,
    parse_sampler,
    validate_labels,
)
from .oracle import naive_match_oracle, random_oracle_tweets
from .presets import PRESETS, columbus_2015_11, preset, san_diego_2015_11
from .users import Infeasible, fill_counts, solve_user_counts

__all__ = [
    "CorpusSpec",
    "Disc",
    "GeneratedCorpus",
    "Infeasible",
    "PRESETS",
    "Segment",
    "SourceAlloc",
    "SpecError",
    "Stratum",
    "Uniform",
    "UserConstraints",
    "columbus_2015_11",
    "fill_counts",
    "generate",
    "load_manifest",
    "naive_match_oracle",
    "parse_sampler",
    "preset",
    "random_oracle_tweets",
    "san_diego_2015_11",
    "solve_user_counts",
    "validate_labels",
]
