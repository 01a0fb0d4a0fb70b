"""Minimal deterministic SVG line plots.

Static vector documents for densities and trajectories; no styling
engine, no timestamps, no randomness, so identical inputs give
byte-identical files (the reproducibility contract extends to plots).
"""

from __future__ import annotations

import numpy as np

__all__ = ["svg_line_plot"]

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]

_W, _H = 720, 440
_ML, _MR, _MT, _MB = 64, 16, 34, 46


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def svg_line_plot(series, title: str = "", xlabel: str = "",
                  ylabel: str = "") -> str:
    """Render labelled (x, y) series to an SVG document string.

    series is an iterable of (label, x, y) with aligned 1-D arrays.
    Limits come from the data; colors cycle through a fixed palette.
    """
    series = [(str(lb), np.asarray(x, float), np.asarray(y, float))
              for lb, x, y in series]
    if not series:
        raise ValueError("nothing to plot")
    finite = [(x[np.isfinite(y)], y[np.isfinite(y)]) for _, x, y in series]
    xlo = min(x.min() for x, _ in finite if len(x))
    xhi = max(x.max() for x, _ in finite if len(x))
    ylo = min(y.min() for _, y in finite if len(y))
    yhi = max(y.max() for _, y in finite if len(y))
    if yhi == ylo:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    pad = 0.04 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def sx(v):
        return _ML + (v - xlo) / (xhi - xlo) * pw if xhi > xlo else _ML

    def sy(v):
        return _MT + (yhi - v) / (yhi - ylo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" '
           f'height="{_H}" viewBox="0 0 {_W} {_H}">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" '
           'fill="none" stroke="#404040" stroke-width="1"/>']
    font = 'font-family="Helvetica,Arial,sans-serif"'
    if title:
        out.append(f'<text x="{_W // 2}" y="20" {font} font-size="14" '
                   f'text-anchor="middle">{_esc(title)}</text>')
    for tv in _ticks(xlo, xhi):
        px = sx(tv)
        out.append(f'<line x1="{px:.2f}" y1="{_MT + ph}" x2="{px:.2f}" '
                   f'y2="{_MT + ph + 4}" stroke="#404040"/>')
        out.append(f'<text x="{px:.2f}" y="{_MT + ph + 17}" {font} '
                   f'font-size="10" text-anchor="middle">{_fmt(tv)}</text>')
    for tv in _ticks(ylo, yhi):
        py = sy(tv)
        out.append(f'<line x1="{_ML - 4}" y1="{py:.2f}" x2="{_ML}" '
                   f'y2="{py:.2f}" stroke="#404040"/>')
        out.append(f'<text x="{_ML - 7}" y="{py + 3:.2f}" {font} '
                   f'font-size="10" text-anchor="end">{_fmt(tv)}</text>')
    if xlabel:
        out.append(f'<text x="{_ML + pw // 2}" y="{_H - 10}" {font} '
                   f'font-size="11" text-anchor="middle">{_esc(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{_MT + ph // 2}" {font} font-size="11" '
                   f'text-anchor="middle" transform="rotate(-90 14 '
                   f'{_MT + ph // 2})">{_esc(ylabel)}</text>')
    for j, (label, x, y) in enumerate(series):
        color = _PALETTE[j % len(_PALETTE)]
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}"
                       for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        ly = _MT + 14 + 14 * j
        out.append(f'<line x1="{_ML + pw - 130}" y1="{ly - 4}" '
                   f'x2="{_ML + pw - 110}" y2="{ly - 4}" stroke="{color}" '
                   'stroke-width="1.5"/>')
        out.append(f'<text x="{_ML + pw - 105}" y="{ly}" {font} '
                   f'font-size="10">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))
