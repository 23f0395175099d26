"""Minimal standalone SVG charts: polylines, bars, axes and dashed markers."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 480, 360
MARGIN = 50


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        return MARGIN + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * (WIDTH - 2 * MARGIN)

    def py(self, y):
        return HEIGHT - MARGIN - (np.asarray(y) - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2 * MARGIN)


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="{MARGIN / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def _axes(frame: _Frame, xlabel: str, ylabel: str, xticks=True) -> list[str]:
    left, right = MARGIN, WIDTH - MARGIN
    top, bottom = MARGIN, HEIGHT - MARGIN
    out = [
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>',
    ]
    for v in np.linspace(frame.y0, frame.y1, 5):
        y = frame.py(v)
        out.append(f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end" font-size="10">{v:.3g}</text>')
    if xticks:
        for v in np.linspace(frame.x0, frame.x1, 5):
            x = frame.px(v)
            out.append(f'<text x="{x:.2f}" y="{bottom + 16}" text-anchor="middle" font-size="10">{v:.3g}</text>')
    return out


def _hline(frame: _Frame, y: float) -> str:
    yy = frame.py(y)
    return (
        f'<line class="marker" x1="{MARGIN}" y1="{yy:.2f}" x2="{WIDTH - MARGIN}" y2="{yy:.2f}" '
        'stroke="gray" stroke-dasharray="6,4"/>'
    )


def line_chart(
    x: Sequence[float],
    y: Sequence[float],
    title: str = "",
    xlabel: str = "x",
    ylabel: str = "y",
    hline: float | None = None,
    ylim: tuple[float, float] | None = None,
) -> str:
    """Polyline chart of ``y`` against ``x``; ``hline`` adds a dashed horizontal marker."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    frame = _Frame((x.min(), x.max()), ylim or (float(y.min()), float(y.max())))
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(frame.px(x), frame.py(y)))
    body = _header(title) + _axes(frame, xlabel, ylabel)
    body.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
    if hline is not None:
        body.append(_hline(frame, hline))
    return "\n".join(body + ["</svg>"]) + "\n"


def bar_chart(
    labels: Sequence[str],
    values: Sequence[float],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    hline: float | None = None,
    ylim: tuple[float, float] = (0.0, 1.0),
) -> str:
    """One bar per label; ``hline`` adds a dashed horizontal marker."""
    values = np.asarray(values, dtype=float)
    n = len(labels)
    frame = _Frame((0.0, float(n)), ylim)
    body = _header(title) + _axes(frame, xlabel, ylabel, xticks=False)
    for i, (label, v) in enumerate(zip(labels, values)):
        left, right = frame.px(i + 0.15), frame.px(i + 0.85)
        top, base = frame.py(v), frame.py(ylim[0])
        body.append(
            f'<rect class="bar" x="{left:.2f}" y="{top:.2f}" width="{right - left:.2f}" '
            f'height="{base - top:.2f}" fill="steelblue"/>'
        )
        body.append(
            f'<text x="{frame.px(i + 0.5):.2f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" '
            f'font-size="10">{escape(str(label))}</text>'
        )
    if hline is not None:
        body.append(_hline(frame, hline))
    return "\n".join(body + ["</svg>"]) + "\n"
