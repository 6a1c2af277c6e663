"""Shapiro–Wilk W test, Royston's AS R94 approximation."""

from __future__ import annotations

import math
from statistics import NormalDist
from typing import Sequence

import numpy as np

from ..errors import DegenerateError, InputError

_STD = NormalDist()

# polynomial coefficients, lowest order first
_C1 = (0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_C2 = (0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633)
_C3 = (0.5440, -0.39978, 0.025054, -6.714e-4)
_C4 = (1.3822, -0.77857, 0.062767, -0.0020322)
_C5 = (-1.5861, -0.31082, -0.083751, 0.0038915)
_C6 = (-0.4803, -0.082676, 0.0030302)
_G = (-2.273, 0.459)


def _poly(c: Sequence[float], x: float) -> float:
    out = 0.0
    for coef in reversed(c):
        out = out * x + coef
    return out


def sw_coefficients(n: int) -> np.ndarray:
    """Antisymmetric weights ``a`` (ascending order, unit norm) for sample size ``n``."""
    half = n // 2
    if n == 3:
        top = np.array([math.sqrt(0.5)])
    else:
        # upper normal scores, largest first
        m = np.array([-_STD.inv_cdf((i - 0.375) / (n + 0.25)) for i in range(1, half + 1)])
        summ2 = 2.0 * float(m @ m)
        ssumm2 = math.sqrt(summ2)
        rsn = 1.0 / math.sqrt(n)
        a1 = m[0] / ssumm2 + _poly(_C1, rsn)
        top = np.empty(half)
        top[0] = a1
        if n > 5:
            a2 = m[1] / ssumm2 + _poly(_C2, rsn)
            fac = math.sqrt((summ2 - 2 * m[0] ** 2 - 2 * m[1] ** 2) / (1 - 2 * a1 ** 2 - 2 * a2 ** 2))
            top[1] = a2
            top[2:] = m[2:] / fac
        else:
            fac = math.sqrt((summ2 - 2 * m[0] ** 2) / (1 - 2 * a1 ** 2))
            top[1:] = m[1:] / fac
    a = np.zeros(n)
    a[n - half:] = top[::-1]
    a[:half] = -top
    return a


def shapiro_wilk(xs: Sequence[float]) -> tuple[float, float]:
    """Return ``(W, p)``. Valid for 3 ≤ n ≤ 5000."""
    x = np.sort(np.asarray(xs, dtype=np.float64))
    n = x.size
    if not 3 <= n <= 5000:
        raise InputError(f"Shapiro-Wilk needs 3 <= n <= 5000, got {n}")
    if not np.all(np.isfinite(x)):
        raise InputError("Shapiro-Wilk: non-finite values")
    if x[-1] - x[0] < 1e-19 * max(1.0, abs(x[0])):
        raise DegenerateError("Shapiro-Wilk: zero variance")
    xc = (x - x.mean()) / (x[-1] - x[0])
    a = sw_coefficients(n)
    w = float((a @ xc) ** 2 / (xc @ xc))
    w = min(w, 1.0)

    if n == 3:
        p = (6.0 / math.pi) * (math.asin(math.sqrt(w)) - math.pi / 3.0)
        return w, max(p, 0.0)

    y = math.log1p(-w) if w < 1.0 else -math.inf
    if n <= 11:
        gamma = _poly(_G, n)
        if y >= gamma:
            return w, 1e-99
        y = -math.log(gamma - y)
        mu, sigma = _poly(_C3, n), math.exp(_poly(_C4, n))
    else:
        ln = math.log(n)
        mu, sigma = _poly(_C5, ln), math.exp(_poly(_C6, ln))
    if y == -math.inf:
        return w, 1.0
    return w, 1.0 - NormalDist(mu, sigma).cdf(y)
