"""Rasterization of instances and solutions into fixed-resolution grayscale images.

Conventions: images are (H, W) uint8 arrays, y grows downward, and a world
point w maps to the pixel floor(affine(w)). The same affine map is shared
by the condition/solution images of a pair and stored in the manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRAY = 128
WHITE = 255
BLACK = 0

# World window rasterized onto the image; slightly wider than the [-1, 1]
# data range so 2 px node disks never clip at the border.
WORLD_LO = -1.1
WORLD_HI = 1.1


@dataclass(frozen=True)
class WorldToPixel:
    """Affine world->pixel map (px = a*x + b*y + c; py = d*x + e*y + f)."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def apply(self, pts: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty_like(p)
        out[:, 0] = self.a * p[:, 0] + self.b * p[:, 1] + self.c
        out[:, 1] = self.d * p[:, 0] + self.e * p[:, 1] + self.f
        return out if np.asarray(pts).ndim == 2 else out[0]

    def invert(self, pix: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pix, dtype=float))
        det = self.a * self.e - self.b * self.d
        x = (self.e * (p[:, 0] - self.c) - self.b * (p[:, 1] - self.f)) / det
        y = (-self.d * (p[:, 0] - self.c) + self.a * (p[:, 1] - self.f)) / det
        out = np.column_stack((x, y))
        return out if np.asarray(pix).ndim == 2 else out[0]

    def as_tuple(self) -> tuple[float, ...]:
        return (self.a, self.b, self.c, self.d, self.e, self.f)


def default_map(resolution: int) -> WorldToPixel:
    s = resolution / (WORLD_HI - WORLD_LO)
    # y axis flipped: world +y is up, pixel rows grow downward. The +0.5
    # places the world origin on a pixel center (not a boundary), so
    # symmetric shapes rasterize without straddling a 4-pixel corner.
    return WorldToPixel(s, 0.0, -WORLD_LO * s + 0.5, 0.0, -s, WORLD_HI * s + 0.5)


def blank(resolution: int, value: int) -> np.ndarray:
    return np.full((resolution, resolution), value, dtype=np.uint8)


def bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer line trace from (x0, y0) to (x1, y1), inclusive."""
    pts = []
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    x, y = x0, y0
    while True:
        pts.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return pts


def _stamp(img: np.ndarray, x: int, y: int, value: int, offsets) -> None:
    h, w = img.shape
    for ox, oy in offsets:
        px, py = x + ox, y + oy
        if 0 <= px < w and 0 <= py < h:
            img[py, px] = value


_WIDTH_OFFSETS = {
    1: [(0, 0)],
    2: [(0, 0), (1, 0), (0, 1), (1, 1)],
}


def draw_segment(img: np.ndarray, a_px, b_px, value: int, width: int = 1) -> None:
    """Bresenham trace with a small stamp for thickness (1 or 2 px)."""
    offsets = _WIDTH_OFFSETS[width]
    x0, y0 = int(math.floor(a_px[0])), int(math.floor(a_px[1]))
    x1, y1 = int(math.floor(b_px[0])), int(math.floor(b_px[1]))
    for x, y in bresenham(x0, y0, x1, y1):
        _stamp(img, x, y, value, offsets)


def draw_polyline(img: np.ndarray, pts_px: np.ndarray, value: int,
                  width: int = 1, closed: bool = True) -> None:
    n = len(pts_px)
    last = n if closed else n - 1
    for i in range(last):
        draw_segment(img, pts_px[i], pts_px[(i + 1) % n], value, width)


def draw_disk(img: np.ndarray, center_px, radius: int, value: int) -> None:
    """Filled disk: pixels whose center lies within radius of the point."""
    cx, cy = center_px
    h, w = img.shape
    x_lo = max(0, int(math.floor(cx - radius - 1)))
    x_hi = min(w - 1, int(math.ceil(cx + radius + 1)))
    y_lo = max(0, int(math.floor(cy - radius - 1)))
    y_hi = min(h - 1, int(math.ceil(cy + radius + 1)))
    for y in range(y_lo, y_hi + 1):
        for x in range(x_lo, x_hi + 1):
            if (x + 0.5 - cx) ** 2 + (y + 0.5 - cy) ** 2 <= radius * radius:
                img[y, x] = value


def fill_polygon(img: np.ndarray, poly_px: np.ndarray, value: int) -> None:
    """Scanline fill: a pixel is inside if its center is inside the polygon."""
    v = np.asarray(poly_px, dtype=float)
    n = len(v)
    h, w = img.shape
    y_min = max(0, int(math.floor(v[:, 1].min())))
    y_max = min(h - 1, int(math.ceil(v[:, 1].max())))
    for row in range(y_min, y_max + 1):
        yc = row + 0.5
        xs = []
        for i in range(n):
            y1, y2 = v[i, 1], v[(i + 1) % n, 1]
            if (y1 > yc) != (y2 > yc):
                x1, x2 = v[i, 0], v[(i + 1) % n, 0]
                xs.append(x1 + (yc - y1) / (y2 - y1) * (x2 - x1))
        xs.sort()
        for k in range(0, len(xs) - 1, 2):
            c_lo = max(0, int(math.ceil(xs[k] - 0.5)))
            c_hi = min(w - 1, int(math.floor(xs[k + 1] - 0.5)))
            if c_hi >= c_lo:
                img[row, c_lo:c_hi + 1] = value


def rasterize_square_pair(inst, square_index: int,
                          resolution: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """Binary (0/255) images: 1 px curve stroke, and one filled square."""
    wmap = default_map(resolution)
    curve_img = blank(resolution, 0)
    draw_polyline(curve_img, wmap.apply(inst.curve), 255, width=1, closed=True)
    square_img = blank(resolution, 0)
    quad = wmap.apply(inst.squares[square_index].vertices)
    fill_polygon(square_img, quad, 255)
    return curve_img, square_img


def rasterize_steiner_pair(points: np.ndarray, graph,
                           resolution: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """Condition: terminals as black r=2 disks on gray. Solution: white 2 px
    edges drawn first, then black disks for every node."""
    wmap = default_map(resolution)
    cond = blank(resolution, GRAY)
    for p in wmap.apply(np.asarray(points, float)):
        draw_disk(cond, p, 2, BLACK)
    sol = blank(resolution, GRAY)
    vp = wmap.apply(graph.vertices)
    for i, j in graph.edges:
        draw_segment(sol, vp[i], vp[j], WHITE, width=2)
    for p in vp:
        draw_disk(sol, p, 2, BLACK)
    return cond, sol


def rasterize_polygon_pair(points: np.ndarray, polygon: np.ndarray,
                           resolution: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """Condition: input points as black disks on gray. Solution: black
    interior, 1 px white edges, gray background."""
    wmap = default_map(resolution)
    cond = blank(resolution, GRAY)
    for p in wmap.apply(np.asarray(points, float)):
        draw_disk(cond, p, 2, BLACK)
    sol = blank(resolution, GRAY)
    poly_px = wmap.apply(np.asarray(polygon, float))
    fill_polygon(sol, poly_px, BLACK)
    draw_polyline(sol, poly_px, WHITE, width=1, closed=True)
    return cond, sol
