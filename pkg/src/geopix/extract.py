"""Recover geometric structures from rasterized or model-generated images.

All coordinates here are continuous pixel coordinates (x = column,
y = row, y grows downward); callers map back to world space with the
manifest's affine map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import (
    GeometryError,
    PlaneGraph,
    convex_hull,
    points_to_segments_distance,
    polyline_segments,
)
from .raster import bresenham

EIGHT_CONN = np.ones((3, 3), dtype=int)


class ExtractionError(RuntimeError):
    """No structure could be recovered from the image."""


@dataclass
class SnapParams:
    theta_min: float = -0.10
    theta_max: float = 0.10
    theta_step: float = 0.01
    translation_radius: int = 3
    translation_step: float = 0.5


@dataclass
class ExtractionThresholds:
    binarize_white: int = 192
    binarize_black: int = 64
    edge_fraction: float = 0.7
    snap_radius: float = 3.0
    close_vertex_dist: float = 5.0
    collinear_angle: float = 0.12
    endpoint_exclusion: float = 3.0


def min_area_rect(points: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Minimum-area enclosing rectangle via rotating calipers on the hull.

    Returns (corners (4,2) in cyclic order, width, height).
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise GeometryError("no points")
    try:
        hull = convex_hull(pts)
    except GeometryError:
        # Collinear or tiny blobs: fall back to the axis-aligned box.
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]],
                            [hi[0], hi[1]], [lo[0], hi[1]]])
        return corners, float(hi[0] - lo[0]), float(hi[1] - lo[1])

    best = None
    m = len(hull)
    for i in range(m):
        e = hull[(i + 1) % m] - hull[i]
        norm = np.hypot(*e)
        if norm == 0:
            continue
        u = e / norm
        v = np.array([-u[1], u[0]])
        proj_u = hull @ u
        proj_v = hull @ v
        w = proj_u.max() - proj_u.min()
        h = proj_v.max() - proj_v.min()
        area = w * h
        if best is None or area < best[0] - 1e-12:
            best = (area, u, v, proj_u.min(), proj_u.max(), proj_v.min(), proj_v.max())
    area, u, v, u0, u1, v0, v1 = best
    corners = np.array([u0 * u + v0 * v,
                        u1 * u + v0 * v,
                        u1 * u + v1 * v,
                        u0 * u + v1 * v])
    return corners, float(u1 - u0), float(v1 - v0)


def largest_component_mask(binary: np.ndarray) -> np.ndarray:
    labels, count = ndimage.label(binary, structure=EIGHT_CONN)
    if count == 0:
        raise ExtractionError("no foreground pixels")
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, range(1, count + 1))
    return labels == (int(np.argmax(sizes)) + 1)


def _pixel_corner_points(mask: np.ndarray) -> np.ndarray:
    """All four corner points of every set pixel (treats pixels as unit squares)."""
    rows, cols = np.nonzero(mask)
    c = cols.astype(float)
    r = rows.astype(float)
    return np.concatenate([
        np.column_stack((c, r)),
        np.column_stack((c + 1, r)),
        np.column_stack((c, r + 1)),
        np.column_stack((c + 1, r + 1)),
    ])


EDGE_MARGIN = 0.25  # px past the outermost pixel center on each side


def extract_square(mask: np.ndarray) -> np.ndarray:
    """Corners of the min-area rectangle around the largest bright component.

    Axes come from the min-area rectangle over pixel corners; the extents
    come from pixel-center projections onto those axes. A pixel is filled
    iff its center is inside the shape, so the true edge lies within one
    grid pitch past the extreme center; a fixed small margin estimates it.
    """
    binary = mask >= 128
    comp = largest_component_mask(binary)
    corners, w, h = min_area_rect(_pixel_corner_points(comp))
    u = (corners[1] - corners[0]) / max(w, 1e-12)
    v = (corners[3] - corners[0]) / max(h, 1e-12)
    rows, cols = np.nonzero(comp)
    centers = np.column_stack((cols + 0.5, rows + 0.5))
    pu = centers @ u
    pv = centers @ v
    lo_u, hi_u = pu.min() - EDGE_MARGIN, pu.max() + EDGE_MARGIN
    lo_v, hi_v = pv.min() - EDGE_MARGIN, pv.max() + EDGE_MARGIN
    return np.array([lo_u * u + lo_v * v, hi_u * u + lo_v * v,
                     hi_u * u + hi_v * v, lo_u * u + hi_v * v])


def snap_square(quad: np.ndarray, curve_px: np.ndarray,
                params: SnapParams | None = None) -> np.ndarray:
    """Grid-search a small rigid transform maximizing corner-to-curve alignment.

    Rotation is applied about the quad centroid; translations move on a
    sub-pixel grid. The identity is always in the grid, so the returned
    quad never scores worse than the input.
    """
    params = params or SnapParams()
    q = np.asarray(quad, dtype=float)
    starts, ends = polyline_segments(np.asarray(curve_px, float), closed=True)

    n_lo = int(round(params.theta_min / params.theta_step))
    n_hi = int(round(params.theta_max / params.theta_step))
    thetas = np.arange(n_lo, n_hi + 1) * params.theta_step
    T = params.translation_radius
    steps = np.arange(-T, T + params.translation_step / 2, params.translation_step)
    shifts = np.array([(dx, dy) for dy in steps for dx in steps])

    centroid = q.mean(axis=0)
    rel = q - centroid

    # Each corner moves at most `move` from its start, so segments farther
    # than d0 + 2*move + 1 can never become its nearest; prune them per
    # corner (exact, not an approximation).
    half_diag = float(np.linalg.norm(rel, axis=1).max())
    move = T * math.sqrt(2.0) + float(np.abs(thetas).max()) * half_diag
    segs = []
    for i in range(4):
        d0 = points_to_segments_distance(q[i][None], starts, ends, reduce=False)[0]
        keep = d0 <= d0.min() + 2.0 * move + 1.0
        segs.append((starts[keep], ends[keep]))

    def best_over(thetas, shifts):
        cands = []
        for th in thetas:
            c, s = math.cos(th), math.sin(th)
            rot = rel @ np.array([[c, s], [-s, c]]) + centroid
            cands.append(rot[None, :, :] + shifts[:, None, :])
        cands = np.concatenate(cands)                   # (k, 4, 2)
        d = np.zeros((len(cands), 4))
        for i in range(4):
            d[:, i] = points_to_segments_distance(cands[:, i], *segs[i])
        k = int(np.argmin(d.mean(axis=1)))
        return cands[k], float(thetas[k // len(shifts)])

    best, th0 = best_over(thetas, shifts)
    # Refine with a finer grid around the coarse optimum.
    fine_t = params.translation_step / 4.0
    fshifts = (best.mean(axis=0) - centroid) + np.array(
        [(dx, dy) for dy in np.arange(-2, 2.01) * fine_t
         for dx in np.arange(-2, 2.01) * fine_t])
    fthetas = th0 + np.arange(-2, 2.01) * params.theta_step / 4.0
    refined, _ = best_over(fthetas, fshifts)
    return refined


NODE_COVER_RADIUS = 3.0   # px explained by a terminal's own disk marker
NODE_REFINE_RADIUS = 2.5  # px window for centroid refinement (disk radius + .5)
NODE_MERGE_DIST = 2.0     # px below which a blob is the terminal's own marker


def detect_nodes(img: np.ndarray, terminals_px: np.ndarray,
                 th: ExtractionThresholds | None = None) -> np.ndarray:
    """Every terminal plus blob centroids of unexplained dark components.

    Terminals come from the condition image, so they are taken as nodes
    directly. Pixels within a terminal marker's footprint are removed
    before labeling; remaining components are auxiliary-node disks (or
    fragments of them, when disks overlap a terminal's). Each fragment
    centroid is refined on the full dark mask, then dropped if it snaps
    onto a terminal within snap_radius.
    """
    th = th or ExtractionThresholds()
    binary = img <= th.binarize_black
    h, w = binary.shape
    terms = np.atleast_2d(np.asarray(terminals_px, dtype=float)) \
        if len(terminals_px) else np.zeros((0, 2))

    rem = binary
    if len(terms):
        yy, xx = np.mgrid[0:h, 0:w]
        cx, cy = xx + 0.5, yy + 0.5
        d2 = ((cx[:, :, None] - terms[:, 0]) ** 2
              + (cy[:, :, None] - terms[:, 1]) ** 2).min(axis=2)
        rem = binary & (d2 > NODE_COVER_RADIUS ** 2)

    labels, count = ndimage.label(rem, structure=EIGHT_CONN)
    extras: list[np.ndarray] = []
    brows, bcols = np.nonzero(binary)
    bpts = np.column_stack((bcols + 0.5, brows + 0.5))
    for lab in range(1, count + 1):
        rows, cols = np.nonzero(labels == lab)
        if len(rows) < 2:      # single-pixel specks
            continue
        p = np.array([cols.mean() + 0.5, rows.mean() + 0.5])
        # Mean-shift onto the full disk (fragments are off-center).
        for _ in range(2):
            near = bpts[np.linalg.norm(bpts - p, axis=1) <= NODE_REFINE_RADIUS]
            if len(near):
                p = near.mean(axis=0)
        if len(terms) and np.linalg.norm(terms - p, axis=1).min() <= NODE_MERGE_DIST:
            continue
        if any(np.linalg.norm(p - q) < 2.0 for q in extras):
            continue
        extras.append(p)
    if not len(terms) and not extras:
        return np.zeros((0, 2))
    return np.vstack([terms] + [np.array(extras).reshape(-1, 2)]) \
        if extras else terms.copy()


def _edge_fraction(fg: np.ndarray, a, b, exclusion: float) -> float | None:
    """Fraction of traced pixels (outside endpoint exclusion zones) that are lit.

    Returns None when the exclusion zones swallow the whole trace.
    """
    h, w = fg.shape
    x0, y0 = int(math.floor(a[0])), int(math.floor(a[1]))
    x1, y1 = int(math.floor(b[0])), int(math.floor(b[1]))
    pix = bresenham(x0, y0, x1, y1)
    total = 0
    lit = 0
    ex2 = exclusion * exclusion
    for x, y in pix:
        cx, cy = x + 0.5, y + 0.5
        if (cx - a[0]) ** 2 + (cy - a[1]) ** 2 <= ex2:
            continue
        if (cx - b[0]) ** 2 + (cy - b[1]) ** 2 <= ex2:
            continue
        total += 1
        if 0 <= y < h and 0 <= x < w and fg[y, x]:
            lit += 1
    if total == 0:
        return None
    return lit / total


def _white_foreground(img: np.ndarray, th: ExtractionThresholds) -> np.ndarray:
    """Bright-pixel mask with 1 px dilation (tolerates line rounding)."""
    return ndimage.binary_dilation(img >= th.binarize_white, structure=EIGHT_CONN)


def _prune_collinear(nodes: np.ndarray, edges: list[tuple[int, int]],
                     collinear_angle: float) -> list[tuple[int, int]]:
    """At each node, keep only the shortest of near-collinear incident edges."""
    lengths = {e: float(np.hypot(*(nodes[e[0]] - nodes[e[1]]))) for e in edges}
    rejected: set[tuple[int, int]] = set()
    for v in range(len(nodes)):
        incident = sorted((e for e in edges if v in e), key=lambda e: (lengths[e], e))
        dirs: list[np.ndarray] = []
        for e in incident:
            other = e[1] if e[0] == v else e[0]
            d = nodes[other] - nodes[v]
            norm = np.hypot(*d)
            if norm == 0:
                continue
            d = d / norm
            if any(math.acos(min(1.0, max(-1.0, float(np.dot(d, u)))))
                   < collinear_angle for u in dirs):
                rejected.add(e)
            else:
                dirs.append(d)
    return [e for e in edges if e not in rejected]


def extract_graph(img: np.ndarray, nodes: np.ndarray,
                  th: ExtractionThresholds | None = None) -> PlaneGraph:
    """Edges between detected nodes by the line-coverage test."""
    th = th or ExtractionThresholds()
    nodes = np.asarray(nodes, dtype=float)
    if len(nodes) == 0:
        raise ExtractionError("no nodes")
    fg = _white_foreground(img, th)

    edges = []
    n = len(nodes)
    for i in range(n):
        for j in range(i + 1, n):
            dist = float(np.hypot(*(nodes[i] - nodes[j])))
            if dist < th.close_vertex_dist:
                edges.append((i, j))
                continue
            frac = _edge_fraction(fg, nodes[i], nodes[j], th.endpoint_exclusion)
            # None: the trace sits entirely inside the exclusion zones, so
            # the image cannot rule the edge out; keep it as a candidate and
            # let the collinear prune discard it if a shorter path explains it.
            if frac is None or frac > th.edge_fraction:
                edges.append((i, j))
    edges = _prune_collinear(nodes, edges, th.collinear_angle)
    edges = _break_cycles(nodes, edges)
    return PlaneGraph(nodes, edges)


def _break_cycles(nodes: np.ndarray, edges: list[tuple[int, int]]
                  ) -> list[tuple[int, int]]:
    """Minimal spanning forest of the candidate edges (Kruskal).

    Lit shortcut chords across a bend survive the fraction test but are
    always longer than the edges they bypass (tree edges never meet below
    120 degrees), so dropping the longest edge of every cycle removes
    exactly the spurious candidates.
    """
    order = sorted(edges, key=lambda e: (float(np.hypot(*(nodes[e[0]] - nodes[e[1]]))), e))
    parent = list(range(len(nodes)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    kept = []
    for u, v in order:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            kept.append((u, v))
    return [e for e in edges if e in set(kept)]


def extract_polygon(img: np.ndarray, points_px: np.ndarray,
                    th: ExtractionThresholds | None = None) -> list[int]:
    """Hamiltonian simple cycle over line-coverage candidate edges.

    Returns the cycle as indices into points_px; raises ExtractionError
    when no valid cycle exists.
    """
    th = th or ExtractionThresholds()
    pts = np.asarray(points_px, dtype=float)
    n = len(pts)
    if n < 3:
        raise ExtractionError("need at least 3 points")
    fg = _white_foreground(img, th)

    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            frac = _edge_fraction(fg, pts[i], pts[j], th.endpoint_exclusion)
            if frac is None or frac > th.edge_fraction:
                adj[i].add(j)
                adj[j].add(i)
    if any(len(a) < 2 for a in adj):
        raise ExtractionError("a point has fewer than 2 candidate edges")

    xs, ys = pts[:, 0].tolist(), pts[:, 1].tolist()

    def crosses(u, v, path_edges):
        from .maxap import _segments_properly_cross
        for a, b in path_edges:
            if a in (u, v) or b in (u, v):
                continue
            if _segments_properly_cross(xs[u], ys[u], xs[v], ys[v],
                                        xs[a], ys[a], xs[b], ys[b]):
                return True
        return False

    path = [0]
    used = [False] * n
    used[0] = True
    path_edges: list[tuple[int, int]] = []

    def search() -> bool:
        if len(path) == n:
            last = path[-1]
            return 0 in adj[last] and not crosses(last, 0, path_edges)
        u = path[-1]
        for v in sorted(adj[u]):
            if used[v] or crosses(u, v, path_edges):
                continue
            used[v] = True
            path.append(v)
            path_edges.append((u, v))
            if search():
                return True
            path_edges.pop()
            path.pop()
            used[v] = False
        return False

    if not search():
        raise ExtractionError("no simple Hamiltonian cycle in candidate edges")
    return path
