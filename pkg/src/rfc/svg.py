"""Tiny SVG 1.1 emitter: axes, polylines and point markers."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 440
    lines: list = field(default_factory=list)
    markers: list = field(default_factory=list)

    def line(self, x, y, label=None, color=None):
        self.lines.append((np.asarray(x, float), np.asarray(y, float), label, color))

    def points(self, x, y, shape="x", label=None, color="#000000"):
        self.markers.append((np.asarray(x, float), np.asarray(y, float), shape, label, color))

    def _limits(self):
        xs = [s[0] for s in self.lines + self.markers]
        ys = [s[1] for s in self.lines + self.markers]
        x = np.concatenate(xs) if xs else np.zeros(1)
        y = np.concatenate(ys) if ys else np.zeros(1)
        x, y = x[np.isfinite(x)], y[np.isfinite(y)]
        lo = [float(v.min()) if v.size else 0.0 for v in (x, y)]
        hi = [float(v.max()) if v.size else 1.0 for v in (x, y)]
        for i in range(2):
            if hi[i] - lo[i] <= 1e-12 * max(1.0, abs(hi[i])):
                lo[i] -= 1.0
                hi[i] += 1.0
            pad = 0.05 * (hi[i] - lo[i])
            lo[i] -= pad
            hi[i] += pad
        return lo, hi

    def render(self) -> str:
        ml, mr, mt, mb = 70, 20, 36, 50
        pw, ph = self.width - ml - mr, self.height - mt - mb
        (x0, y0), (x1, y1) = self._limits()

        def px(x):
            return ml + (x - x0) / (x1 - x0) * pw

        def py(y):
            return mt + (y1 - y) / (y1 - y0) * ph

        out = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.width}" height="{self.height}">',
            f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="white" stroke="black"/>',
            f'<text x="{self.width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(self.title)}</text>',
            f'<text x="{ml + pw / 2:.1f}" y="{self.height - 10}" text-anchor="middle" font-size="12">{escape(self.xlabel)}</text>',
            f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{escape(self.ylabel)}</text>',
        ]
        for v in np.linspace(x0, x1, 6):
            out.append(f'<line x1="{px(v):.2f}" y1="{mt + ph}" x2="{px(v):.2f}" y2="{mt + ph + 4}" stroke="black"/>')
            out.append(f'<text x="{px(v):.2f}" y="{mt + ph + 16}" text-anchor="middle" font-size="10">{v:.3g}</text>')
        for v in np.linspace(y0, y1, 6):
            out.append(f'<line x1="{ml - 4}" y1="{py(v):.2f}" x2="{ml}" y2="{py(v):.2f}" stroke="black"/>')
            out.append(f'<text x="{ml - 6}" y="{py(v) + 3:.2f}" text-anchor="end" font-size="10">{v:.3g}</text>')
        if x0 < 0 < x1:
            out.append(f'<line x1="{px(0):.2f}" y1="{mt}" x2="{px(0):.2f}" y2="{mt + ph}" stroke="#bbbbbb" stroke-dasharray="3,3"/>')
        if y0 < 0 < y1:
            out.append(f'<line x1="{ml}" y1="{py(0):.2f}" x2="{ml + pw}" y2="{py(0):.2f}" stroke="#bbbbbb" stroke-dasharray="3,3"/>')

        legend = []
        for i, (x, y, label, color) in enumerate(self.lines):
            color = color or PALETTE[i % len(PALETTE)]
            ok = np.isfinite(x) & np.isfinite(y)
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{pts}"/>')
            if label:
                legend.append((label, color, "line"))
        for x, y, shape, label, color in self.markers:
            for a, b in zip(x, y):
                if not (np.isfinite(a) and np.isfinite(b)):
                    continue
                cx, cy = px(a), py(b)
                if shape == "o":
                    out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="4" fill="none" stroke="{color}"/>')
                else:
                    out.append(
                        f'<path d="M{cx - 4:.2f},{cy - 4:.2f} L{cx + 4:.2f},{cy + 4:.2f} '
                        f'M{cx - 4:.2f},{cy + 4:.2f} L{cx + 4:.2f},{cy - 4:.2f}" stroke="{color}"/>'
                    )
            if label:
                legend.append((label, color, shape))
        for i, (label, color, _) in enumerate(legend):
            ly = mt + 14 + 14 * i
            out.append(f'<rect x="{ml + pw - 130}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{ml + pw - 115}" y="{ly + 1}" font-size="10">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
