"""Classification metrics, agreement rates, Bland–Altman and range checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from ..errors import InputError

LOA_Z = 1.96


@dataclass
class ConfusionCounts:
    tp: dict[Hashable, int] = field(default_factory=dict)
    fp: dict[Hashable, int] = field(default_factory=dict)
    fn: dict[Hashable, int] = field(default_factory=dict)

    def __post_init__(self):
        for d in (self.tp, self.fp, self.fn):
            if any(v < 0 for v in d.values()):
                raise InputError("confusion counts must be non-negative")

    @property
    def classes(self) -> list:
        return sorted(set(self.tp) | set(self.fp) | set(self.fn), key=repr)

    @classmethod
    def single(cls, tp: int, fp: int, fn: int) -> "ConfusionCounts":
        return cls({1: tp}, {1: fp}, {1: fn})

    @classmethod
    def from_labels(cls, truth: Sequence, pred: Sequence, classes: Sequence | None = None) -> "ConfusionCounts":
        """One-vs-rest counts for every class seen (or listed)."""
        if len(truth) != len(pred):
            raise InputError("label vectors differ in length")
        classes = sorted(set(truth) | set(pred)) if classes is None else list(classes)
        tp = {c: 0 for c in classes}
        fp = dict(tp)
        fn = dict(tp)
        for t, p in zip(truth, pred):
            if t == p:
                tp[t] += 1
            else:
                fp[p] += 1
                fn[t] += 1
        return cls(tp, fp, fn)


def _ratio(a: int, b: int) -> float:
    return a / b if b else 0.0


def precision_recall_f1(c: ConfusionCounts) -> dict:
    """Per-class and macro (unweighted mean) precision, recall and F1.

    A zero denominator gives 0 for that metric.
    """
    per = {}
    for k in c.classes:
        tp, fp, fn = c.tp.get(k, 0), c.fp.get(k, 0), c.fn.get(k, 0)
        p, r = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        per[k] = (p, r, f1)
    n = len(per)
    macro = tuple(math.fsum(v[i] for v in per.values()) / n if n else 0.0 for i in range(3))
    return {"per_class": per, "macro": macro}


def agreement_rate(a: Sequence[float], b: Sequence[float], mode: str = "exact", tol: float = 1.0) -> float:
    if len(a) != len(b):
        raise InputError("agreement_rate: length mismatch")
    if mode not in ("exact", "fuzzy"):
        raise InputError(f"unknown agreement mode {mode!r}")
    if not a:
        return 0.0
    if mode == "exact":
        hits = sum(x == y for x, y in zip(a, b))
    else:
        hits = sum(abs(x - y) <= tol for x, y in zip(a, b))
    return hits / len(a)


@dataclass(frozen=True)
class BlandAltmanResult:
    bias: float
    sd: float
    lower: float
    upper: float
    outliers: list[int]
    n: int

    def to_dict(self) -> dict:
        return {"bias": self.bias, "sd": self.sd, "lower": self.lower, "upper": self.upper,
                "n": self.n, "outliers": self.outliers}


def bland_altman(model_scores: Sequence[float], human_scores: Sequence[float]) -> BlandAltmanResult:
    """Mean difference (model − human) and 1.96·sd limits, sample sd."""
    if len(model_scores) != len(human_scores):
        raise InputError("bland_altman: length mismatch")
    if len(model_scores) < 2:
        raise InputError("bland_altman needs at least two pairs")
    d = np.asarray(model_scores, dtype=np.float64) - np.asarray(human_scores, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise InputError("bland_altman: non-finite values")
    bias = float(d.mean())
    sd = float(d.std(ddof=1))
    half = LOA_Z * sd
    lower, upper = bias - half, bias + half
    outliers = [int(i) for i in np.nonzero((d < lower) | (d > upper))[0]]
    return BlandAltmanResult(bias, sd, lower, upper, outliers, int(d.size))


def out_of_range_rate(predictions: Sequence[float],
                      ranges: tuple[float, float] | Sequence[tuple[float, float]]) -> tuple[float, list[int]]:
    """Fraction of predictions outside their closed interval, plus the offending indices.

    ``ranges`` is either one ``(lo, hi)`` pair for all items or one pair per item.
    """
    n = len(predictions)
    if len(ranges) == 2 and all(isinstance(v, (int, float)) for v in ranges):
        ranges = [tuple(ranges)] * n
    if len(ranges) != n:
        raise InputError("one range per prediction required")
    bad = []
    for i, (x, (lo, hi)) in enumerate(zip(predictions, ranges)):
        if lo > hi:
            raise InputError(f"malformed interval [{lo}, {hi}] at index {i}")
        if not lo <= x <= hi:
            bad.append(i)
    return (len(bad) / n if n else 0.0), bad
