"""Hand-written SVG output: polylines, shaded bands and raster cells."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

WIDTH, HEIGHT, MARGIN = 640, 420, 40


@dataclass
class Figure:
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    title: str = ""
    parts: list[str] = field(default_factory=list)

    def _px(self, x, y):
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        px = MARGIN + (np.asarray(x, float) - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)
        py = HEIGHT - MARGIN - (np.asarray(y, float) - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)
        return px, py

    def polyline(self, x: Sequence[float], y: Sequence[float], color: str, width: float = 1.5,
                 label: str = "") -> None:
        px, py = self._px(x, y)
        ok = np.isfinite(px) & np.isfinite(py)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px[ok], py[ok]))
        self.parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
                          f'points="{pts}"><title>{label}</title></polyline>')

    def vband(self, lo: float, hi: float, color: str = "#f4c7c3") -> None:
        """Shade ``lo <= x <= hi`` over the full height."""
        (px0, _), (px1, _) = self._px(lo, 0), self._px(hi, 0)
        self.parts.append(f'<rect x="{float(px0):.2f}" y="{MARGIN}" width="{float(px1 - px0):.2f}" '
                          f'height="{HEIGHT - 2 * MARGIN}" fill="{color}" opacity="0.6"/>')

    def cells(self, occupied: np.ndarray, box: tuple[float, float, float, float],
              color: str = "#9ecae1", max_side: int = 256) -> None:
        """Draw a boolean raster (first index along x), downsampled to at
        most ``max_side`` cells per axis."""
        n = occupied.shape[0]
        f = max(1, int(np.ceil(n / max_side)))
        m = n // f
        coarse = occupied[: m * f, : m * f].reshape(m, f, m, f).any(axis=(1, 3))
        x0, x1, y0, y1 = box
        dx, dy = (x1 - x0) / m, (y1 - y0) / m
        for i, j in zip(*np.nonzero(coarse)):
            ax, ay = self._px(x0 + i * dx, y0 + (j + 1) * dy)
            bx, by = self._px(x0 + (i + 1) * dx, y0 + j * dy)
            self.parts.append(f'<rect x="{float(ax):.2f}" y="{float(ay):.2f}" '
                              f'width="{float(bx - ax):.2f}" height="{float(by - ay):.2f}" '
                              f'fill="{color}"/>')

    def render(self) -> str:
        frame = (f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
                 f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#444"/>')
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        labels = (
            f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{self.title}</text>'
            f'<text x="{MARGIN}" y="{HEIGHT - 12}" font-size="10">{x0:.3g}</text>'
            f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - 12}" font-size="10" text-anchor="end">{x1:.3g}</text>'
            f'<text x="4" y="{HEIGHT - MARGIN}" font-size="10">{y0:.3g}</text>'
            f'<text x="4" y="{MARGIN + 10}" font-size="10">{y1:.3g}</text>'
        )
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">\n{frame}\n{body}\n{labels}\n</svg>\n')

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())


def padded_range(values, pad: float = 0.05) -> tuple[float, float]:
    v = np.asarray(values, float)
    v = v[np.isfinite(v)]
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo if hi > lo else 1.0
    return lo - pad * span, hi + pad * span
