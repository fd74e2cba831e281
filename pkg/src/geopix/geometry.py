"""Planar geometry primitives shared by every pipeline stage.

Coordinates are plain floats in normalized world units; point collections
are (n, 2) float64 numpy arrays. All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Relative tolerance for orientation predicates, in world units.
DEFAULT_EPS = 1e-9


class GeometryError(ValueError):
    """Raised for degenerate or malformed geometric input."""


class IntersectionKind(Enum):
    NONE = "none"
    PROPER = "proper"
    ENDPOINT_TOUCH = "endpoint_touch"
    COLLINEAR_OVERLAP = "collinear_overlap"


@dataclass
class PlaneGraph:
    """Straight-line graph: vertex coordinates plus index-pair edges.

    ``terminal_flags[i]`` marks vertex i as an input terminal (as opposed
    to an auxiliary point added by a solver).
    """

    vertices: np.ndarray            # (n, 2) float
    edges: list[tuple[int, int]]    # index pairs, i < j
    terminal_flags: list[bool] = field(default_factory=list)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.edges = [(min(i, j), max(i, j)) for i, j in self.edges]
        n = len(self.vertices)
        if not self.terminal_flags:
            self.terminal_flags = [True] * n
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise GeometryError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise GeometryError(f"edge ({i},{j}) out of range for {n} vertices")
            if (i, j) in seen:
                raise GeometryError(f"duplicate edge ({i},{j})")
            seen.add((i, j))

    def total_length(self) -> float:
        v = self.vertices
        return float(sum(np.hypot(*(v[i] - v[j])) for i, j in self.edges))


def orientation(a, b, c, eps: float = DEFAULT_EPS) -> int:
    """Sign of the cross product (b-a) x (c-a) with relative tolerance.

    Returns +1 (counterclockwise), -1 (clockwise) or 0 (collinear within
    eps scaled by the magnitude of the operands).
    """
    ax, ay = a
    bx, by = b
    cx, cy = c
    ux, uy = bx - ax, by - ay
    vx, vy = cx - ax, cy - ay
    cross = ux * vy - uy * vx
    scale = max(abs(ux), abs(uy), abs(vx), abs(vy), 1e-300)
    if abs(cross) <= eps * scale * scale:
        return 0
    return 1 if cross > 0 else -1


def _on_segment_collinear(a, b, p, eps: float) -> bool:
    """Assuming p collinear with a-b, test whether p lies within the segment."""
    return (min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
            and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps)


def segment_intersect(s1, s2, eps: float = DEFAULT_EPS) -> IntersectionKind:
    """Classify the intersection of two segments.

    PROPER means the segment interiors cross at a single point;
    ENDPOINT_TOUCH covers shared endpoints and endpoint-on-interior
    contacts; COLLINEAR_OVERLAP means a shared sub-segment of positive
    length. Symmetric in its arguments.
    """
    p1, q1 = s1
    p2, q2 = s2
    d1 = orientation(p2, q2, p1, eps)
    d2 = orientation(p2, q2, q1, eps)
    d3 = orientation(p1, q1, p2, eps)
    d4 = orientation(p1, q1, q2, eps)

    if d1 != d2 and d3 != d4 and 0 not in (d1, d2, d3, d4):
        return IntersectionKind.PROPER

    if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
        # All four points collinear: measure 1-D overlap on the dominant axis.
        axis = 0 if abs(q1[0] - p1[0]) + abs(q2[0] - p2[0]) >= \
                    abs(q1[1] - p1[1]) + abs(q2[1] - p2[1]) else 1
        lo1, hi1 = sorted((p1[axis], q1[axis]))
        lo2, hi2 = sorted((p2[axis], q2[axis]))
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        if hi - lo > eps:
            return IntersectionKind.COLLINEAR_OVERLAP
        if hi - lo >= -eps:
            return IntersectionKind.ENDPOINT_TOUCH
        return IntersectionKind.NONE

    # Non-collinear but at least one orientation is zero: an endpoint of one
    # segment may lie on the other.
    touch_eps = eps * 10
    if d1 == 0 and _on_segment_collinear(p2, q2, p1, touch_eps):
        return IntersectionKind.ENDPOINT_TOUCH
    if d2 == 0 and _on_segment_collinear(p2, q2, q1, touch_eps):
        return IntersectionKind.ENDPOINT_TOUCH
    if d3 == 0 and _on_segment_collinear(p1, q1, p2, touch_eps):
        return IntersectionKind.ENDPOINT_TOUCH
    if d4 == 0 and _on_segment_collinear(p1, q1, q2, touch_eps):
        return IntersectionKind.ENDPOINT_TOUCH
    if d1 != d2 and d3 != d4:
        # Orientation zero but off-segment never happens here, so the
        # remaining mixed-sign case is a proper crossing that grazed the
        # tolerance; classify conservatively as a touch.
        return IntersectionKind.ENDPOINT_TOUCH
    return IntersectionKind.NONE


def point_segment_distance(p, a, b) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    l2 = dx * dx + dy * dy
    if l2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / l2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def polyline_segments(points: np.ndarray, closed: bool) -> tuple[np.ndarray, np.ndarray]:
    """Return (starts, ends) arrays for the polyline's segments."""
    pts = np.asarray(points, dtype=float)
    if closed:
        return pts, np.roll(pts, -1, axis=0)
    return pts[:-1], pts[1:]


def points_to_segments_distance(ps: np.ndarray, starts: np.ndarray,
                                ends: np.ndarray, reduce: bool = True
                                ) -> np.ndarray:
    """Min distance from each query point to any segment (vectorized).

    ps: (m, 2); starts/ends: (s, 2). Returns (m,) distances, or the full
    (m, s) matrix when reduce is False.
    """
    ps = np.atleast_2d(np.asarray(ps, dtype=float))
    d = ends - starts                                   # (s, 2)
    l2 = np.einsum("ij,ij->i", d, d)                    # (s,)
    l2 = np.where(l2 == 0.0, 1.0, l2)
    w = ps[:, None, :] - starts[None, :, :]             # (m, s, 2)
    t = np.clip(np.einsum("msj,sj->ms", w, d) / l2, 0.0, 1.0)
    proj = starts[None, :, :] + t[:, :, None] * d[None, :, :]
    dist = np.linalg.norm(ps[:, None, :] - proj, axis=2)
    return dist.min(axis=1) if reduce else dist


def point_to_polyline_distance(p, points: np.ndarray, closed: bool = True) -> float:
    """Euclidean distance from a point to a polyline (min over segments)."""
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        raise GeometryError("empty polyline")
    if len(pts) == 1:
        return math.hypot(p[0] - pts[0, 0], p[1] - pts[0, 1])
    starts, ends = polyline_segments(pts, closed)
    return float(points_to_segments_distance(np.asarray(p, float)[None, :],
                                             starts, ends)[0])


def shoelace_area(vertices: np.ndarray) -> float:
    """Unsigned polygon area from its ordered vertices."""
    v = np.asarray(vertices, dtype=float)
    if len(v) < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    x, y = v[:, 0], v[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))) / 2.0


def signed_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull (counterclockwise, monotone chain). Vertices are input points.

    Raises GeometryError if all points are collinear.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < 3:
        raise GeometryError("hull needs at least 3 points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    p = [tuple(pts[i]) for i in order]
    # Drop exact duplicates to keep the chain strict.
    dedup = [p[0]]
    for q in p[1:]:
        if q != dedup[-1]:
            dedup.append(q)
    p = dedup
    if len(p) < 3:
        raise GeometryError("degenerate hull: fewer than 3 distinct points")

    def chain(seq):
        out = []
        for q in seq:
            while len(out) >= 2 and orientation(out[-2], out[-1], q, 0.0) <= 0:
                out.pop()
            out.append(q)
        return out

    lower = chain(p)
    upper = chain(reversed(p))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise GeometryError("degenerate hull: collinear input")
    return np.array(hull, dtype=float)


def point_in_polygon(p, vertices: np.ndarray, include_boundary: bool = True) -> bool:
    """Even-odd test with an explicit boundary check."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    for i in range(n):
        if point_segment_distance(p, v[i], v[(i + 1) % n]) <= 1e-12:
            return include_boundary
    x, y = p
    inside = False
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xin = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if xin > x:
                inside = not inside
    return inside


def minimum_spanning_tree(points: np.ndarray) -> PlaneGraph:
    """Euclidean MST of the complete graph via Prim's algorithm.

    Ties are resolved by smallest vertex index, so the result is
    deterministic for a given input ordering.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise GeometryError("MST needs at least 2 points")
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = dist[0].copy()
    parent = np.zeros(n, dtype=int)
    edges = []
    for _ in range(n - 1):
        cand = np.where(~in_tree, best, np.inf)
        u = int(np.argmin(cand))
        edges.append((min(u, parent[u]), max(u, parent[u])))
        in_tree[u] = True
        closer = dist[u] < best
        upd = closer & ~in_tree
        best[upd] = dist[u][upd]
        parent[upd] = u
    edges.sort()
    return PlaneGraph(pts, edges)


def is_tree(g: PlaneGraph) -> bool:
    """True iff the graph is connected with exactly |V| - 1 edges."""
    n = len(g.vertices)
    if n == 0:
        return False
    if len(g.edges) != n - 1:
        return False
    adj = [[] for _ in range(n)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * n
    stack = [0]
    seen[0] = True
    count = 1
    while stack:
        u = stack.pop()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                stack.append(w)
    return count == n


def is_simple_polygon(vertices: np.ndarray, eps: float = DEFAULT_EPS) -> bool:
    """True iff the closed polygon has no self-intersection.

    Non-adjacent edges must not intersect at all; adjacent edges may meet
    only at their shared endpoint (no collinear backtracking).
    """
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if n < 3:
        return False
    for i in range(n):
        if np.array_equal(v[i], v[(i + 1) % n]):
            return False
    for i in range(n):
        a = (v[i], v[(i + 1) % n])
        for j in range(i + 1, n):
            b = (v[j], v[(j + 1) % n])
            adjacent = (j == i + 1) or (i == 0 and j == n - 1)
            kind = segment_intersect(a, b, eps)
            if adjacent:
                if kind in (IntersectionKind.PROPER,
                            IntersectionKind.COLLINEAR_OVERLAP):
                    return False
            elif kind is not IntersectionKind.NONE:
                return False
    return True


def polyline_proper_self_intersections(points: np.ndarray) -> int:
    """Count proper crossings between non-adjacent segments of a closed polyline.

    Vectorized over all segment pairs; strict sign tests, so grazing
    contacts are not counted.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    a = pts
    b = np.roll(pts, -1, axis=0)

    def cross_sign(p, q, r):
        # (q-p) x (r-p) for broadcastable stacks
        return ((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

    a_i = a[:, None, :]
    b_i = b[:, None, :]
    a_j = a[None, :, :]
    b_j = b[None, :, :]
    d1 = cross_sign(a_j, b_j, a_i)
    d2 = cross_sign(a_j, b_j, b_i)
    d3 = cross_sign(a_i, b_i, a_j)
    d4 = cross_sign(a_i, b_i, b_j)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)

    idx = np.arange(n)
    adjacent = (np.abs(idx[:, None] - idx[None, :]) <= 1) | \
               (np.abs(idx[:, None] - idx[None, :]) == n - 1)
    proper &= ~adjacent
    return int(np.count_nonzero(proper) // 2)
