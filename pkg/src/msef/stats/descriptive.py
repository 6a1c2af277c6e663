"""Quantiles, tertile recoding and distribution summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..errors import InputError

TERTILES = (Fraction(1, 3), Fraction(2, 3))


def quantile(xs: Sequence[float], p: float | Fraction) -> float:
    """Linear interpolation between order statistics (position ``(n-1)·p``).

    ``p`` may be a Fraction, which keeps positions such as 1/3·(n-1) exact so
    values sitting on an order statistic compare equal to it.
    """
    if not xs:
        raise InputError("quantile of an empty sample")
    if not 0 <= p <= 1:
        raise InputError(f"quantile level {p} outside [0, 1]")
    s = sorted(float(x) for x in xs)
    h = (len(s) - 1) * (Fraction(p) if isinstance(p, Fraction) else Fraction(str(float(p))))
    lo = math.floor(h)
    frac = h - lo
    if frac == 0:
        return s[lo]
    return s[lo] + float(frac) * (s[lo + 1] - s[lo])


@dataclass(frozen=True)
class Tertiles:
    labels: list[int]
    cuts: tuple[float, float]


def tertile_recode(scores: Sequence[float]) -> Tertiles:
    """Label 0 for x ≤ q(1/3), 1 for x ≤ q(2/3), else 2."""
    if len(scores) < 3:
        raise InputError(f"tertile recoding needs at least 3 values, got {len(scores)}")
    q1, q2 = (quantile(scores, p) for p in TERTILES)
    labels = [0 if x <= q1 else 1 if x <= q2 else 2 for x in scores]
    return Tertiles(labels, (q1, q2))


def distribution_summary(xs: Sequence[float]) -> dict:
    if not xs:
        raise InputError("summary of an empty sample")
    q1, med, q3 = (quantile(xs, Fraction(k, 4)) for k in (1, 2, 3))
    return {"n": len(xs), "median": med, "q1": q1, "q3": q3, "iqr": q3 - q1,
            "min": float(min(xs)), "max": float(max(xs)), "mean": math.fsum(xs) / len(xs)}
