"""Maximum-area simple polygonization.

solve_exact_dfs runs a pruned backtracking search: the anchor is pinned at
the bottommost-leftmost point, candidates are tried in angular order
around the centroid, and any partial path whose newest edge crosses an
earlier edge is cut off. solve_naive_oracle brute-forces permutations as
an independent cross-check for small n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, is_simple_polygon, shoelace_area

EXACT_MAX_POINTS = 15
NAIVE_MAX_POINTS = 8


class SizeLimitError(ValueError):
    pass


@dataclass
class PolygonizationResult:
    order: list[int]          # vertex indices, cyclic, starting at the anchor
    polygon: np.ndarray       # (n, 2) coordinates in cycle order
    area: float
    explored_count: int = 0


def _anchor_index(pts: np.ndarray) -> int:
    return int(np.lexsort((pts[:, 0], pts[:, 1]))[0])


def _canonical_cycle(order: list[int]) -> tuple[int, ...]:
    """Cycle signature invariant to rotation and reflection."""
    n = len(order)
    best = None
    doubled = order + order
    rev = order[::-1] + order[::-1]
    for seq in (doubled, rev):
        for i in range(n):
            cand = tuple(seq[i:i + n])
            if best is None or cand < best:
                best = cand
    return best


def _segments_properly_cross(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    """Strict interior crossing test on plain floats (hot path)."""
    d1 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    d2 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax)
    d3 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx)
    d4 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx)
    return d1 * d2 < 0 and d3 * d4 < 0


def solve_exact_dfs(points: np.ndarray) -> PolygonizationResult:
    """Globally maximal-area simple polygon through all points (n <= 15)."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 3:
        raise GeometryError("need at least 3 points")
    if n > EXACT_MAX_POINTS:
        raise SizeLimitError(f"exact DFS supports n <= {EXACT_MAX_POINTS}, got {n}")
    if len(np.unique(pts, axis=0)) != n:
        raise GeometryError("points must be distinct")

    anchor = _anchor_index(pts)
    centroid = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    others = [i for i in range(n) if i != anchor]
    others.sort(key=lambda i: (ang[i], i))
    rank = {p: r for r, p in enumerate(others)}

    xs = pts[:, 0].tolist()
    ys = pts[:, 1].tolist()
    explored = 0
    best_area = -1.0
    best_order: list[int] | None = None

    path = [anchor]
    used = [False] * n
    used[anchor] = True

    def cross_area(i, j):
        return xs[i] * ys[j] - xs[j] * ys[i]

    def edge_crosses_path(u, v, upto):
        # Check segment (u, v) against path edges [0, upto)
        for e in range(upto):
            a, b = path[e], path[e + 1]
            if a in (u, v) or b in (u, v):
                continue
            if _segments_properly_cross(xs[u], ys[u], xs[v], ys[v],
                                        xs[a], ys[a], xs[b], ys[b]):
                return True
        return False

    # Reflection elimination: fix that the second vertex has a smaller
    # angular rank than the final vertex by branching over ordered pairs.
    for si in range(len(others)):
        second = others[si]
        path.append(second)
        used[second] = True
        a2 = cross_area(anchor, second)

        def dfs_with_last_constraint(area2):
            nonlocal explored, best_area, best_order
            explored += 1
            depth = len(path)
            if depth == n:
                u = path[-1]
                if rank[u] < rank[second]:
                    return  # mirror image already covered
                if not edge_crosses_path(u, anchor, depth - 2):
                    total = abs(area2 + cross_area(u, anchor)) / 2.0
                    if total > best_area + 1e-15 or (
                            abs(total - best_area) <= 1e-15 and best_order is not None
                            and _canonical_cycle(path) < _canonical_cycle(best_order)):
                        best_area = total
                        best_order = list(path)
                return
            u = path[-1]
            for v in others:
                if used[v]:
                    continue
                if edge_crosses_path(u, v, depth - 1):
                    continue
                path.append(v)
                used[v] = True
                dfs_with_last_constraint(area2 + cross_area(u, v))
                used[v] = False
                path.pop()

        dfs_with_last_constraint(a2)
        used[second] = False
        path.pop()

    if best_order is None:
        raise GeometryError("no simple polygonization found (collinear input?)")
    order = list(_canonical_cycle(best_order))
    # Area recomputed on the canonical rotation so equal cycles give
    # bit-identical values regardless of search order.
    return PolygonizationResult(order, pts[order], shoelace_area(pts[order]), explored)


def solve_naive_oracle(points: np.ndarray) -> PolygonizationResult:
    """Brute-force maximum over all vertex permutations (n <= 8)."""
    from itertools import permutations

    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 3:
        raise GeometryError("need at least 3 points")
    if n > NAIVE_MAX_POINTS:
        raise SizeLimitError(f"naive oracle supports n <= {NAIVE_MAX_POINTS}, got {n}")

    anchor = _anchor_index(pts)
    rest = [i for i in range(n) if i != anchor]
    best_area = -1.0
    best_order = None
    explored = 0
    for perm in permutations(rest):
        if perm[0] > perm[-1]:
            continue  # each cycle and its reverse counted once
        explored += 1
        order = [anchor] + list(perm)
        if not is_simple_polygon(pts[order]):
            continue
        area = shoelace_area(pts[order])
        if area > best_area + 1e-15 or (
                abs(area - best_area) <= 1e-15 and best_order is not None
                and _canonical_cycle(order) < _canonical_cycle(best_order)):
            best_area = area
            best_order = order
    if best_order is None:
        raise GeometryError("no simple polygonization found")
    order = list(_canonical_cycle(best_order))
    # Area recomputed on the canonical rotation so equal cycles give
    # bit-identical values regardless of search order.
    return PolygonizationResult(order, pts[order], shoelace_area(pts[order]), explored)


def random_simple_polygon(points: np.ndarray, seed: int) -> PolygonizationResult:
    """A seeded random valid polygonization.

    Tries random permutations first; falls back to the star-shaped
    angular-sort polygon, which is always simple for points in general
    position.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 3:
        raise GeometryError("need at least 3 points")
    rng = np.random.default_rng(seed)
    anchor = _anchor_index(pts)
    rest = [i for i in range(n) if i != anchor]
    for _ in range(100):
        perm = list(rng.permutation(rest))
        order = [anchor] + [int(i) for i in perm]
        if is_simple_polygon(pts[order]):
            order = list(_canonical_cycle(order))
            return PolygonizationResult(order, pts[order], shoelace_area(pts[order]))
    centroid = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    order = sorted(range(n), key=lambda i: (ang[i], i))
    order = list(_canonical_cycle(order))
    return PolygonizationResult(order, pts[order], shoelace_area(pts[order]))
