"""Ordinary least squares with t-based inference, and polynomial fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy import stats as sps

from ..errors import InputError, SingularityError

# relative size of an R diagonal entry below which a column counts as dependent
RANK_TOL = 1e-10


@dataclass
class OlsResult:
    names: list[str]
    beta: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    sigma2: float
    r2: float
    n: int
    df: int
    residuals: np.ndarray = field(repr=False)

    def coef(self, name: str) -> float:
        return float(self.beta[self.names.index(name)])

    def table(self) -> list[dict]:
        return [{"term": nm, "beta": float(b), "se": float(s), "t": _finite(t), "p": float(p),
                 "ci_low": float(lo), "ci_high": float(hi)}
                for nm, b, s, t, p, lo, hi in zip(self.names, self.beta, self.se, self.t, self.p,
                                                  self.ci_low, self.ci_high)]

    def to_dict(self) -> dict:
        return {"n": self.n, "df": self.df, "r2": self.r2, "sigma2": self.sigma2, "terms": self.table()}


def _finite(x: float) -> float | str:
    # JSON has no infinities
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def t_two_sided_p(t: float, df: int) -> float:
    if math.isinf(t):
        return 0.0
    return float(2.0 * sps.t.sf(abs(t), df))


def t_critical(df: int, level: float = 0.975) -> float:
    return float(sps.t.ppf(level, df))


def ols_fit(X: np.ndarray | Sequence[Sequence[float]], y: Sequence[float], add_intercept: bool = True,
            names: Sequence[str] | None = None) -> OlsResult:
    """Least squares via a QR factorisation of the design.

    Columns are named ``x0..x{k-1}`` unless ``names`` is given; the intercept,
    when added, is the first term and is called ``const``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if y.shape != (n,):
        raise InputError(f"y has shape {y.shape}, expected ({n},)")
    names = [f"x{j}" for j in range(X.shape[1])] if names is None else list(names)
    if len(names) != X.shape[1]:
        raise InputError("one name per design column required")
    if add_intercept:
        X = np.column_stack([np.ones(n), X])
        names = ["const"] + names
    k = X.shape[1]
    if n <= k:
        raise InputError(f"need more observations ({n}) than terms ({k})")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("non-finite values in design or response")

    Q, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    scale = np.linalg.norm(X, axis=0)
    for j in range(k):
        if scale[j] == 0 or diag[j] <= RANK_TOL * scale[j]:
            raise SingularityError(f"design column {names[j]!r} is linearly dependent on earlier columns",
                                   column=names[j])

    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    df = n - k
    rss = float(resid @ resid)
    if rss <= (1e-13 * float(np.linalg.norm(y))) ** 2:
        rss = 0.0
    sigma2 = rss / df
    Rinv = linalg.solve_triangular(R, np.eye(k))
    se = np.sqrt(sigma2 * np.sum(Rinv ** 2, axis=1))
    t, p = np.empty(k), np.empty(k)
    for j in range(k):
        if se[j] > 0:
            t[j] = beta[j] / se[j]
            p[j] = t_two_sided_p(t[j], df)
        elif beta[j] == 0:
            t[j], p[j] = 0.0, 1.0
        else:  # exact fit
            t[j], p[j] = math.copysign(math.inf, beta[j]), 0.0
    crit = t_critical(df)
    if add_intercept:
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    return OlsResult(names, beta, se, t, p, beta - crit * se, beta + crit * se,
                     sigma2, r2, n, df, resid)


@dataclass(frozen=True)
class PolyFit:
    coefficients: list[float]  # ascending powers
    r2: float
    degree: int

    @property
    def vertex(self) -> float | None:
        if self.degree != 2 or self.coefficients[2] == 0:
            return None
        return -self.coefficients[1] / (2.0 * self.coefficients[2])

    def to_dict(self) -> dict:
        return {"degree": self.degree, "coefficients": self.coefficients, "r2": self.r2,
                "vertex": self.vertex}


def poly_fit_r2(x: Sequence[float], y: Sequence[float], degree: int = 2) -> PolyFit:
    x = np.asarray(x, dtype=np.float64)
    if degree < 1:
        raise InputError("degree must be at least 1")
    if x.size <= degree + 1:
        raise InputError(f"need more than {degree + 1} points for degree {degree}")
    if np.ptp(x) == 0:
        raise SingularityError("x has no spread", column="x")
    V = np.column_stack([x ** d for d in range(1, degree + 1)])
    res = ols_fit(V, y, add_intercept=True, names=[f"x^{d}" for d in range(1, degree + 1)])
    return PolyFit([float(b) for b in res.beta], res.r2, degree)
