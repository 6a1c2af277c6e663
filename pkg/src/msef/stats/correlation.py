"""Pearson and Spearman correlation matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from ..errors import InputError, UndefinedCorrelationError


@dataclass(frozen=True)
class CorrMatrix:
    names: list[str]
    values: np.ndarray
    method: str

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.values[self.names.index(a), self.names.index(b)])

    def to_dict(self) -> dict:
        return {"method": self.method, "names": self.names,
                "matrix": [[float(v) for v in row] for row in self.values]}


def corr_matrix(columns: Mapping[str, Sequence[float]], method: str = "pearson") -> CorrMatrix:
    """Symmetric correlation matrix with an exact unit diagonal.

    Spearman is Pearson on mid-ranks (ties share the average rank).
    """
    if method not in ("pearson", "spearman"):
        raise InputError(f"unknown correlation method {method!r}")
    names = list(columns)
    if not names:
        raise InputError("no columns")
    data = [np.asarray(columns[k], dtype=np.float64) for k in names]
    n = data[0].size
    if any(c.size != n for c in data):
        raise InputError("columns differ in length")
    if n < 3:
        raise InputError("correlation needs at least 3 observations")
    if method == "spearman":
        data = [rankdata(c, method="average") for c in data]
    Z = np.empty((n, len(names)))
    for j, (name, c) in enumerate(zip(names, data)):
        dev = c - c.mean()
        norm = np.sqrt(dev @ dev)
        if norm == 0 or np.ptp(c) == 0:
            raise UndefinedCorrelationError(f"column {name!r} has zero variance", column=name)
        Z[:, j] = dev / norm
    M = Z.T @ Z
    M = np.clip(np.triu(M, 1), -1.0, 1.0)
    M = M + M.T
    np.fill_diagonal(M, 1.0)
    return CorrMatrix(names, M, method)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    return corr_matrix({"x": x, "y": y})["x", "y"]


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    return corr_matrix({"x": x, "y": y}, "spearman")["x", "y"]
