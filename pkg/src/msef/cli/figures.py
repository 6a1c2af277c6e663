"""Minimal hand-written SVG charts. Output is plain text and stable across runs."""

from __future__ import annotations

from typing import Sequence

import numpy as np

W, H, PAD = 420, 300, 40


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _frame(title: str, body: list[str], xlabel: str = "", ylabel: str = "", axes: bool = True) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13" font-family="sans-serif">{title}</text>',
    ]
    if axes:
        head += [
            f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD / 2}" y2="{H - PAD}" stroke="black"/>',
            f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>',
        ]
    if xlabel:
        head.append(f'<text x="{W / 2}" y="{H - 8}" text-anchor="middle" font-size="11" '
                    f'font-family="sans-serif">{xlabel}</text>')
    if ylabel:
        head.append(f'<text x="12" y="{H / 2}" text-anchor="middle" font-size="11" font-family="sans-serif" '
                    f'transform="rotate(-90 12 {H / 2})">{ylabel}</text>')
    return "\n".join(head + body + ["</svg>"]) + "\n"


class _Scale:
    def __init__(self, lo: float, hi: float, a: float, b: float):
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi, self.a, self.b = lo, hi, a, b

    def __call__(self, v: float) -> float:
        return self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)


def _axes(xs: Sequence[float], ys: Sequence[float]) -> tuple[_Scale, _Scale, list[str]]:
    sx = _Scale(min(xs), max(xs), PAD, W - PAD / 2)
    sy = _Scale(min(ys), max(ys), H - PAD, PAD)
    ticks = []
    for v in np.linspace(sx.lo, sx.hi, 5):
        ticks.append(f'<text x="{_fmt(sx(v))}" y="{H - PAD + 14}" text-anchor="middle" font-size="9" '
                     f'font-family="sans-serif">{v:.2g}</text>')
    for v in np.linspace(sy.lo, sy.hi, 5):
        ticks.append(f'<text x="{PAD - 4}" y="{_fmt(sy(v) + 3)}" text-anchor="end" font-size="9" '
                     f'font-family="sans-serif">{v:.2g}</text>')
    return sx, sy, ticks


def histogram_svg(values: Sequence[float], title: str, bins: int = 20, xlabel: str = "") -> str:
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    sx, sy, body = _axes([edges[0], edges[-1]], [0, max(1, int(counts.max()))])
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        body.append(f'<rect x="{_fmt(sx(a))}" y="{_fmt(sy(c))}" width="{_fmt(sx(b) - sx(a))}" '
                    f'height="{_fmt(sy(0) - sy(c))}" fill="#6a9fb5" stroke="white"/>')
    return _frame(title, body, xlabel, "count")


def scatter_fit_svg(x: Sequence[float], y: Sequence[float], coefficients: Sequence[float],
                    title: str, xlabel: str = "", ylabel: str = "") -> str:
    """Scatter plus the polynomial with ascending ``coefficients``."""
    sx, sy, body = _axes(x, y)
    for a, b in zip(x, y):
        body.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="1.6" fill="#444" fill-opacity="0.5"/>')
    grid = np.linspace(min(x), max(x), 60)
    fit = np.polynomial.polynomial.polyval(grid, coefficients)
    fit = np.clip(fit, sy.lo, sy.hi)
    pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(grid, fit))
    body.append(f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="2"/>')
    return _frame(title, body, xlabel, ylabel)


def bland_altman_svg(means: Sequence[float], diffs: Sequence[float], bias: float, lower: float,
                     upper: float, title: str) -> str:
    ys = list(diffs) + [lower, upper]
    sx, sy, body = _axes(means, ys)
    for a, b in zip(means, diffs):
        body.append(f'<circle cx="{_fmt(sx(a))}" cy="{_fmt(sy(b))}" r="2" fill="#2c3e50"/>')
    for v, dash in ((bias, ""), (lower, ' stroke-dasharray="4 3"'), (upper, ' stroke-dasharray="4 3"')):
        body.append(f'<line x1="{PAD}" y1="{_fmt(sy(v))}" x2="{W - PAD / 2}" y2="{_fmt(sy(v))}" '
                    f'stroke="#c0392b"{dash}/>')
    return _frame(title, body, "mean of model and human", "model minus human")


def heatmap_svg(names: Sequence[str], matrix: np.ndarray, title: str) -> str:
    n = len(names)
    size = min(W - 2 * PAD, H - 2 * PAD) / max(n, 1)
    x0, y0 = W - PAD / 2 - n * size, PAD
    body = []
    for i in range(n):
        for j in range(n):
            v = float(matrix[i][j])
            # diverging blue-white-red on [-1, 1]
            t = (max(-1.0, min(1.0, v)) + 1) / 2
            r = int(255 * min(1, 2 * t))
            b = int(255 * min(1, 2 * (1 - t)))
            g = int(255 * (1 - abs(2 * t - 1)))
            body.append(f'<rect x="{_fmt(x0 + j * size)}" y="{_fmt(y0 + i * size)}" width="{_fmt(size)}" '
                        f'height="{_fmt(size)}" fill="rgb({r},{g},{b})"><title>{names[i]} / {names[j]}: '
                        f'{v:.3f}</title></rect>')
        body.append(f'<text x="{_fmt(x0 - 3)}" y="{_fmt(y0 + (i + 0.7) * size)}" text-anchor="end" '
                    f'font-size="7" font-family="sans-serif">{names[i]}</text>')
    return _frame(title, body, axes=False)
