"""Corpus construction and refinement: schema, scrubbing, dedup, ratings, tiers, balance."""

from .balance import BalanceReport, balance_dimensions
from .curriculum import RefreshResult, curriculum_refresh, ngram_overlap, per_image_counts
from .dedup import DupPair, dedup, hamming, haversine_m, phash, violations
from .ratings import aggregate, normalize_all, normalize_likert
from .records import (
    ImageRecord,
    QATriplet,
    RatingRecord,
    parse_triplet,
    read_communities,
    read_images,
    read_ratings,
    read_triplets,
    write_communities,
    write_images,
    write_jsonl,
    write_ratings,
)
from .registry import OBJECTIVE, SUBJECTIVE, Dimension, DimensionRegistry
from .scrub import scrub_pii
from .strata import FIXED_THRESHOLDS, Split, TierResult, quintile_bin, stratified_split

__all__ = [
    "BalanceReport", "Dimension", "DimensionRegistry", "DupPair", "FIXED_THRESHOLDS", "ImageRecord",
    "OBJECTIVE", "QATriplet", "RatingRecord", "RefreshResult", "SUBJECTIVE", "Split", "TierResult",
    "aggregate", "balance_dimensions", "curriculum_refresh", "dedup", "hamming", "haversine_m",
    "ngram_overlap", "normalize_all", "normalize_likert", "parse_triplet", "per_image_counts",
    "phash", "quintile_bin", "read_communities", "read_images", "read_ratings", "read_triplets",
    "scrub_pii", "stratified_split", "violations", "write_communities", "write_images",
    "write_jsonl", "write_ratings",
]
