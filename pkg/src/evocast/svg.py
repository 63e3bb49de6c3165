"""Tiny dependency-free SVG chart helpers.

These produce deterministic, diffable figures; the CSVs emitted alongside
remain the canonical data.
"""

from __future__ import annotations

import math

_FONT = 'font-family="Helvetica,Arial,sans-serif"'
PALETTE = ("#2a9d8f", "#e76f51", "#457b9d", "#e9c46a", "#6d597a", "#8ab17d")


class Canvas:
    def __init__(self, width, height):
        self.width = width
        self.height = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
        ]

    def line(self, x1, y1, x2, y2, color="#333", width=1, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{color}" stroke-width="{width}"{d}/>')

    def polyline(self, points, color, width=2):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def rect(self, x, y, w, h, color):
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="{color}"/>')

    def circle(self, x, y, r, color, stroke="none"):
        self.parts.append(
            f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}" stroke="{stroke}"/>')

    def star(self, x, y, r, color):
        pts = []
        for i in range(10):
            rad = r if i % 2 == 0 else r * 0.45
            ang = -math.pi / 2 + i * math.pi / 5
            pts.append((x + rad * math.cos(ang), y + rad * math.sin(ang)))
        s = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
        self.parts.append(f'<polygon points="{s}" fill="{color}" stroke="#333" stroke-width="0.5"/>')

    def text(self, x, y, s, size=11, anchor="middle", color="#222", rotate=None):
        tr = f' transform="rotate({rotate} {x:.2f} {y:.2f})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" {_FONT} font-size="{size}" '
            f'text-anchor="{anchor}" fill="{color}"{tr}>{_esc(s)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"])


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def nice_ticks(lo, hi, target=5):
    """Round tick positions covering [lo, hi]."""
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 0.5:
        ticks.append(round(t, 10))
        t += step
    return ticks


def log_decades(lo, hi):
    lo = max(lo, 1e-12)
    ticks = []
    e = math.floor(math.log10(lo))
    while 10 ** e <= hi * 1.0001:
        if 10 ** e >= lo * 0.9999:
            ticks.append(10 ** e)
        e += 1
    return ticks or [lo, hi]


def fmt_num(v):
    if v == 0:
        return "0"
    if abs(v) >= 10000 or abs(v) < 0.001:
        exp = math.floor(math.log10(abs(v)))
        mant = v / 10 ** exp
        if abs(mant - 1.0) < 1e-9:
            return f"1e{exp}"
        return f"{mant:g}e{exp}"
    return f"{v:g}"


class Axes:
    """Maps data coordinates onto a pixel frame and draws the frame."""

    def __init__(self, canvas, x0, y0, x1, y1, xlim, ylim, logx=False):
        self.c = canvas
        self.x0, self.y0, self.x1, self.y1 = x0, y0, x1, y1
        self.logx = logx
        self.xlim = (math.log10(xlim[0]), math.log10(xlim[1])) if logx else xlim
        self.ylim = ylim

    def px(self, x):
        if self.logx:
            x = math.log10(max(x, 1e-12))
        frac = (x - self.xlim[0]) / (self.xlim[1] - self.xlim[0])
        return self.x0 + frac * (self.x1 - self.x0)

    def py(self, y):
        frac = (y - self.ylim[0]) / (self.ylim[1] - self.ylim[0])
        return self.y1 - frac * (self.y1 - self.y0)

    def frame(self, xticks, yticks, xlabel="", ylabel="", xtick_labels=None):
        c = self.c
        c.line(self.x0, self.y1, self.x1, self.y1)
        c.line(self.x0, self.y0, self.x0, self.y1)
        for i, t in enumerate(xticks):
            x = self.px(t)
            c.line(x, self.y1, x, self.y1 + 4)
            label = xtick_labels[i] if xtick_labels else fmt_num(t)
            c.text(x, self.y1 + 16, label, size=10)
        for t in yticks:
            y = self.py(t)
            c.line(self.x0 - 4, y, self.x0, y)
            c.line(self.x0, y, self.x1, y, color="#eee")
            c.text(self.x0 - 8, y + 3, fmt_num(t), size=10, anchor="end")
        if xlabel:
            c.text((self.x0 + self.x1) / 2, self.y1 + 32, xlabel, size=11)
        if ylabel:
            c.text(self.x0 - 42, (self.y0 + self.y1) / 2, ylabel, size=11, rotate=-90)
