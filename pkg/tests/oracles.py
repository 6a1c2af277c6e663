"""Brute-force reference implementations shared by the stats and acceptance tests."""

import math
import statistics
from fractions import Fraction

import numpy as np

from msef.stats import ConfusionCounts, bland_altman, corr_matrix, precision_recall_f1, quantile, tertile_recode

# reference vectors, values from scipy's AS R94 wrapper
SW_VECTORS = [
    [148, 154, 158, 160, 161, 162, 166, 170, 182, 195, 236],
    [2.1, 3.4, 1.9, 5.6, 4.4, 3.8, 2.7, 4.1, 3.3, 3.0, 2.2, 4.9, 3.6, 2.8, 3.9],
    [0.1, 0.25, 0.3, 0.31, 0.5, 0.9, 1.4, 2.2, 4.5, 9.0],
    [1, 2, 4],
    [6.2, 5.1, 7.7, 6.9, 5.5],
]


def f1_oracle(truth, pred):
    classes = sorted(set(truth) | set(pred))
    out = {}
    for c in classes:
        tp = sum(1 for t, p in zip(truth, pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(truth, pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(truth, pred) if t == c and p != c)
        P = tp / (tp + fp) if tp + fp else 0.0
        R = tp / (tp + fn) if tp + fn else 0.0
        out[c] = (P, R, 2 * P * R / (P + R) if P + R else 0.0)
    return out


def quantile_oracle(xs, p):
    s = sorted(Fraction(x) for x in xs)
    h = (len(s) - 1) * p
    lo = math.floor(h)
    return s[lo] if h == lo else s[lo] + (h - lo) * (s[lo + 1] - s[lo])


def midranks(x):
    return [sum(1 for v in x if v < xi) + (sum(1 for v in x if v == xi) + 1) / 2 for xi in x]


def pearson_oracle(x, y):
    mx, my = sum(x) / len(x), sum(y) / len(y)
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def oracle_sweep(n_instances=1000, seed=0):
    """Largest discrepancy of each statistic against its brute-force oracle."""
    rng = np.random.default_rng(seed)
    worst = {"f1": 0.0, "bland_altman": 0.0, "tertile": 0.0, "correlation": 0.0, "quantile": 0.0}
    for _ in range(n_instances):
        n = int(rng.integers(3, 16))
        truth = rng.integers(0, 3, n).tolist()
        pred = rng.integers(0, 3, n).tolist()
        got = precision_recall_f1(ConfusionCounts.from_labels(truth, pred))["per_class"]
        for c, vals in f1_oracle(truth, pred).items():
            worst["f1"] = max(worst["f1"], max(abs(a - b) for a, b in zip(got[c], vals)))

        m = rng.normal(3, 1, n).round(2).tolist()
        h = rng.normal(3, 1, n).round(2).tolist()
        ba = bland_altman(m, h)
        d = [a - b for a, b in zip(m, h)]
        bias, sd = statistics.fmean(d), statistics.stdev(d)
        out = [i for i, v in enumerate(d) if v < bias - 1.96 * sd or v > bias + 1.96 * sd]
        worst["bland_altman"] = max(worst["bland_altman"], abs(ba.bias - bias), abs(ba.sd - sd),
                                    abs(ba.lower - (bias - 1.96 * sd)), abs(ba.upper - (bias + 1.96 * sd)),
                                    0.0 if ba.outliers == out else 1.0)

        xs = rng.integers(1, 6, n).astype(float).tolist() if rng.random() < 0.5 else rng.normal(size=n).tolist()
        q1, q2 = (quantile_oracle(xs, Fraction(k, 3)) for k in (1, 2))
        labels = [0 if Fraction(x) <= q1 else 1 if Fraction(x) <= q2 else 2 for x in xs]
        t = tertile_recode(xs)
        worst["tertile"] = max(worst["tertile"], abs(t.cuts[0] - float(q1)), abs(t.cuts[1] - float(q2)),
                               0.0 if t.labels == labels else 1.0)
        for p in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(9, 10)):
            worst["quantile"] = max(worst["quantile"], abs(quantile(xs, p) - float(quantile_oracle(xs, p))))

        x = rng.normal(size=n).tolist()
        y = (0.5 * np.array(x) + rng.normal(size=n)).round(1).tolist()
        if len(set(y)) > 1:
            worst["correlation"] = max(
                worst["correlation"],
                abs(corr_matrix({"x": x, "y": y})["x", "y"] - pearson_oracle(x, y)),
                abs(corr_matrix({"x": x, "y": y}, "spearman")["x", "y"] - pearson_oracle(midranks(x), midranks(y))),
            )
    return worst
