"""Per-respondent Likert standardisation and per-image aggregation."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .records import RatingRecord

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalizedRatings:
    values: list[float]
    normalized: bool  # False when passed through (fewer than two ratings)


def normalize_likert(scores: Sequence[float]) -> NormalizedRatings:
    """Rescale one respondent's ratings to ``clip(3 + z, 1, 5)``.

    ``z`` uses the population standard deviation. A respondent who gave the
    same answer every time maps to 3.0 throughout.
    """
    x = np.asarray(scores, dtype=np.float64)
    if x.size < 2:
        log.warning("respondent has %d rating(s); passing through unnormalised", x.size)
        return NormalizedRatings([float(v) for v in x], False)
    sd = x.std()
    if sd == 0.0:
        return NormalizedRatings([3.0] * x.size, True)
    z = (x - x.mean()) / sd
    return NormalizedRatings([float(v) for v in np.clip(3.0 + z, 1.0, 5.0)], True)


def normalize_all(ratings: Iterable[RatingRecord]) -> tuple[list[RatingRecord], list[str]]:
    """Normalise every respondent jointly across dimensions; skipped rows are dropped.

    Returns the rescaled records and the ids of respondents passed through.
    """
    by_resp: dict[str, list[RatingRecord]] = defaultdict(list)
    for r in ratings:
        if not r.skipped:
            by_resp[r.respondent_id].append(r)
    out, flagged = [], []
    for rid in sorted(by_resp):
        rows = by_resp[rid]
        res = normalize_likert([r.score for r in rows])
        if not res.normalized:
            flagged.append(rid)
        out.extend(RatingRecord(r.respondent_id, r.image_id, r.dimension, v)
                   for r, v in zip(rows, res.values))
    return out, flagged


def aggregate(ratings: Iterable[RatingRecord]) -> dict[tuple[str, str], float]:
    """Mean non-skipped score per (image_id, dimension)."""
    acc: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in ratings:
        if not r.skipped:
            acc[(r.image_id, r.dimension)].append(r.score)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}
