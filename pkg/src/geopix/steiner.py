"""Euclidean Steiner minimal trees.

solve_exact enumerates every full topology (n - 2 auxiliary points, all of
degree 3) and relaxes each one with iterated geometric-median updates;
degenerate topologies with fewer auxiliary points appear as collapsed
edges, so the minimum over full topologies plus the MST covers all trees.
Feasible up to n = 8 terminals; beyond that solve_heuristic applies
local 120-degree improvements to the MST.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .geometry import (
    GeometryError,
    IntersectionKind,
    PlaneGraph,
    convex_hull,
    is_tree,
    minimum_spanning_tree,
    point_in_polygon,
    point_to_polyline_distance,
    segment_intersect,
)

EXACT_MAX_TERMINALS = 8
COLLAPSE_EPS = 1e-7
CONVERGE_TOL = 1e-9
MAX_ITERATIONS = 10_000


class SizeLimitError(ValueError):
    """Instance too large for the exact solver; use solve_heuristic."""


@dataclass
class SteinerTopology:
    """Tree topology over terminal slots [0, n) and auxiliary slots [n, n+k)."""

    terminal_count: int
    steiner_count: int
    adjacency: list[tuple[int, int]]


@dataclass
class SteinerSolution:
    graph: PlaneGraph
    total_length: float
    exact: bool
    converged: bool = True


def enumerate_full_topologies(n: int) -> list[SteinerTopology]:
    """All full topologies on n terminals ((2n-5)!! of them for n >= 3).

    Built by repeatedly splitting an edge with a new auxiliary point and
    hanging the next terminal off it.
    """
    if n < 2:
        raise GeometryError("need at least 2 terminals")
    if n == 2:
        return [SteinerTopology(2, 0, [(0, 1)])]
    results = []

    def grow(edges: list[tuple[int, int]], next_terminal: int, next_steiner: int):
        if next_terminal == n:
            results.append(SteinerTopology(n, next_steiner - n, list(edges)))
            return
        for idx in range(len(edges)):
            u, v = edges[idx]
            s = next_steiner
            new_edges = edges[:idx] + edges[idx + 1:] + [(u, s), (v, s), (next_terminal, s)]
            grow(new_edges, next_terminal + 1, next_steiner + 1)

    grow([(0, 1)], 2, n)
    return results


def optimize_topology(topo: SteinerTopology, points: np.ndarray,
                      tol: float = CONVERGE_TOL,
                      max_iter: int = MAX_ITERATIONS) -> tuple[np.ndarray, float, bool]:
    """Optimize auxiliary positions for one fixed topology.

    Each auxiliary point is repeatedly replaced by a Weiszfeld step toward
    the geometric median of its neighbors until positions settle. Returns
    (positions for all slots, total length, converged flag).
    """
    pts = np.asarray(points, dtype=float)
    n, k = topo.terminal_count, topo.steiner_count
    pos = np.zeros((n + k, 2))
    pos[:n] = pts
    if k == 0:
        return pos, _tree_length(pos, topo.adjacency), True

    nbrs = [[] for _ in range(k)]
    for u, v in topo.adjacency:
        if u >= n:
            nbrs[u - n].append(v)
        if v >= n:
            nbrs[v - n].append(u)
    nbr_idx = np.array(nbrs)                       # (k, 3)
    pos[n:] = pts.mean(axis=0)
    # Break symmetry so coincident auxiliary points can separate.
    pos[n:] += 1e-6 * np.arange(k)[:, None] * np.array([1.0, -1.0])

    converged = False
    for _ in range(max_iter):
        nb = pos[nbr_idx]                          # (k, 3, 2)
        d = np.linalg.norm(nb - pos[n:, None, :], axis=2)
        w = 1.0 / np.maximum(d, 1e-12)
        new = np.einsum("kj,kjc->kc", w, nb) / w.sum(axis=1)[:, None]
        move = np.abs(new - pos[n:]).max()
        pos[n:] = new
        if move < tol:
            converged = True
            break
    return pos, _tree_length(pos, topo.adjacency), converged


def _tree_length(pos: np.ndarray, edges) -> float:
    return float(sum(np.hypot(*(pos[u] - pos[v])) for u, v in edges))


def _smith_sweeps(nbr: np.ndarray, pos: np.ndarray, n: int,
                  tol: float, max_iter: int,
                  prune_schedule=None) -> np.ndarray:
    """Batched fixed-point sweeps for full topologies.

    Each sweep solves, per topology, the linear system that places every
    auxiliary point at the distance-weighted average of its 3 neighbors
    (weights from the current positions). Converges far faster than
    one-step median updates. nbr: (T, k, 3) slot indices; pos: (T, n+k, 2)
    updated in place. Returns per-topology convergence flags.

    prune_schedule: optional list of (iteration, margin) pairs. Once past
    an iteration threshold, topologies whose current tree length exceeds
    (1 + margin) times the best length seen so far stop iterating. Each
    topology's current length is an achievable tree length, so the running
    best upper-bounds the global optimum; margins only need to cover how
    much a still-relaxing tree can shrink, which the caller validates
    empirically. Pruned rows are reported as unconverged.
    """
    T, k, _ = nbr.shape
    converged = np.zeros(T, dtype=bool)
    rows = np.arange(T)
    p = pos.copy()
    nbi = nbr
    eye = np.eye(k)
    cols = np.arange(k)
    best = np.inf

    def structure(nbi, m):
        gidx = nbi.reshape(m, 3 * k) + (np.arange(m) * (n + k))[:, None]
        is_st = nbi >= n
        onehot = ((np.where(is_st, nbi - n, 0)[:, :, :, None] == cols)
                  & is_st[:, :, :, None]).astype(float)
        term = (~is_st).astype(float)
        # Terminal-incident edges appear once in nbi, Steiner-Steiner twice.
        edge_w = np.where(is_st, 0.5, 1.0)
        return gidx, onehot, term, edge_w

    gidx, onehot, term, edge_w = structure(nbi, T)
    for it in range(max_iter):
        m = len(rows)
        nb = p.reshape(-1, 2)[gidx].reshape(m, k, 3, 2)
        st = p[:, n:, None, :]
        d = np.sqrt(((nb - st) ** 2).sum(axis=3))
        w = 1.0 / np.maximum(d, 1e-12)                       # (m, k, 3)

        A = eye * w.sum(axis=2)[:, :, None]
        A -= np.einsum("tkj,tkjc->tkc", w, onehot)
        B = np.einsum("tkj,tkj,tkjc->tkc", w, term, nb)
        new = np.linalg.solve(A, B)
        move = np.abs(new - p[:, n:]).max(axis=(1, 2))
        p[:, n:] = new

        lengths = (d * edge_w).sum(axis=(1, 2))
        best = min(best, float(lengths.min()))
        done = move < tol
        drop = done
        if prune_schedule is not None:
            margin = None
            for start, mg in prune_schedule:
                if it >= start:
                    margin = mg
            if margin is not None:
                drop = done | (lengths > best * (1.0 + margin))
        if drop.all() or (drop.mean() > 0.25 and drop.any()):
            pos[rows[drop]] = p[drop]
            converged[rows[drop & done]] = True
            keep = ~drop
            if not keep.any():
                rows = rows[:0]
                break
            rows, p, nbi, move = rows[keep], p[keep], nbi[keep], move[keep]
            gidx, onehot, term, edge_w = structure(nbi, len(rows))
    if len(rows):
        pos[rows] = p
        converged[rows[move < tol]] = True
    return converged


def _optimize_full_topologies_batch(topos: list[SteinerTopology], pts: np.ndarray,
                                    tol: float = 1e-7, max_iter: int = 400):
    """Relax all full topologies simultaneously; returns (pos, lengths, converged)."""
    n = len(pts)
    k = n - 2
    T = len(topos)
    nbr = np.zeros((T, k, 3), dtype=np.int64)
    for t, topo in enumerate(topos):
        per = [[] for _ in range(k)]
        for u, v in topo.adjacency:
            if u >= n:
                per[u - n].append(v)
            if v >= n:
                per[v - n].append(u)
        nbr[t] = per
    pos = np.zeros((T, n + k, 2))
    pos[:, :n] = pts
    pos[:, n:] = pts.mean(axis=0)
    pos[:, n:] += 1e-6 * np.arange(k)[None, :, None] * np.array([1.0, -1.0])

    schedule = [(30, 0.30), (60, 0.15), (120, 0.08), (250, 0.04)]
    conv = _smith_sweeps(nbr, pos, n, tol, max_iter, prune_schedule=schedule)
    lengths = np.zeros(T)
    for t, topo in enumerate(topos):
        lengths[t] = _tree_length(pos[t], topo.adjacency)
    return pos, lengths, conv


def _polish_topology(topo: SteinerTopology, pts: np.ndarray,
                     init: np.ndarray | None = None,
                     tol: float = 1e-12, max_iter: int = 5000) -> np.ndarray:
    """High-accuracy positions for one topology (same sweeps, batch of 1)."""
    n, k = topo.terminal_count, topo.steiner_count
    pos = np.zeros((1, n + k, 2))
    pos[0, :n] = pts
    if init is not None:
        pos[0, n:] = init
    else:
        pos[0, n:] = pts.mean(axis=0)
    if k:
        per = [[] for _ in range(k)]
        for u, v in topo.adjacency:
            if u >= n:
                per[u - n].append(v)
            if v >= n:
                per[v - n].append(u)
        nbr = np.array(per, dtype=np.int64)[None]
        _smith_sweeps(nbr, pos, n, tol, max_iter)
    return pos[0]


def collapse_degenerate_edges(pos: np.ndarray, edges, terminal_count: int,
                              eps: float = COLLAPSE_EPS) -> PlaneGraph:
    """Merge vertices joined by (near) zero-length edges; drop unused slots.

    Auxiliary points always merge into terminals when both endpoints
    qualify, keeping terminal coordinates exact.
    """
    m = len(pos)
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        if np.hypot(*(pos[u] - pos[v])) < eps:
            ru, rv = find(u), find(v)
            if ru == rv:
                continue
            # Prefer the terminal (lower slot) as the representative.
            if rv < ru:
                ru, rv = rv, ru
            parent[rv] = ru

    reps = sorted({find(i) for i in range(m)})
    remap = {r: i for i, r in enumerate(reps)}
    new_edges = set()
    for u, v in edges:
        a, b = remap[find(u)], remap[find(v)]
        if a != b:
            new_edges.add((min(a, b), max(a, b)))
    new_pos = pos[reps]
    flags = [r < terminal_count for r in reps]
    return PlaneGraph(new_pos, sorted(new_edges), flags)


def solve_exact(points: np.ndarray) -> SteinerSolution:
    """Steiner minimal tree by exhaustive full-topology relaxation (n <= 8)."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise GeometryError("need at least 2 points")
    if n > EXACT_MAX_TERMINALS:
        raise SizeLimitError(
            f"exact solver supports n <= {EXACT_MAX_TERMINALS}, got {n}; "
            "use solve_heuristic")
    if len(np.unique(pts, axis=0)) != n:
        raise GeometryError("points must be pairwise distinct")
    if n == 2:
        g = PlaneGraph(pts, [(0, 1)], [True, True])
        return SteinerSolution(g, g.total_length(), exact=True)

    mst = minimum_spanning_tree(pts)
    best_graph = mst
    best_len = mst.total_length()

    topos = enumerate_full_topologies(n)
    pos, lengths, conv = _optimize_full_topologies_batch(topos, pts)
    order = np.argsort(lengths, kind="stable")
    # Polish every near-optimal candidate to full tolerance (ranking from the
    # coarse pass can be off by the coarse tolerance).
    cutoff = lengths[order[0]] * (1.0 + 1e-3) + 1e-9
    candidates = [int(t) for t in order[:10]] + \
                 [int(t) for t in order[10:] if lengths[t] <= cutoff]
    for t in candidates:
        p = _polish_topology(topos[t], pts, init=pos[t, n:])
        g = collapse_degenerate_edges(p, topos[t].adjacency, n)
        length = g.total_length()
        if length < best_len - 1e-12:
            best_len = length
            best_graph = g
    return SteinerSolution(best_graph, best_len, exact=True)


def _angle_at(pos: np.ndarray, center: int, a: int, b: int) -> float:
    u = pos[a] - pos[center]
    v = pos[b] - pos[center]
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    c = float(np.dot(u, v) / (nu * nv))
    return math.acos(min(1.0, max(-1.0, c)))


def solve_heuristic(points: np.ndarray) -> SteinerSolution:
    """MST-based improvement: replace sharp (< 120 deg) corners with auxiliary points."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise GeometryError("need at least 2 points")
    if n == 2:
        g = PlaneGraph(pts, [(0, 1)], [True, True])
        return SteinerSolution(g, g.total_length(), exact=False)

    mst = minimum_spanning_tree(pts)
    pos = [tuple(p) for p in pts]
    edges = set(mst.edges)
    flags = [True] * n
    threshold = 2.0 * math.pi / 3.0 - 1e-12

    for _ in range(3 * n):
        arr = np.array(pos)
        adj = {}
        for u, v in edges:
            adj.setdefault(u, []).append(v)
            adj.setdefault(v, []).append(u)
        best = None  # (angle, center, a, b)
        for c in sorted(adj):
            nb = sorted(adj[c])
            for a, b in combinations(nb, 2):
                ang = _angle_at(arr, c, a, b)
                if ang < threshold and (best is None or ang < best[0] - 1e-15):
                    best = (ang, c, a, b)
        if best is None:
            break
        _, c, a, b = best
        old_len = (np.hypot(*(arr[c] - arr[a])) + np.hypot(*(arr[c] - arr[b])))
        s = len(pos)
        star = SteinerTopology(3, 1, [(0, 3), (1, 3), (2, 3)])
        p3, _, _ = optimize_topology(star, arr[[a, b, c]])
        sp = p3[3]
        new_len = sum(np.hypot(*(sp - arr[x])) for x in (a, b, c))
        if new_len >= old_len - 1e-12:
            break
        pos.append((float(sp[0]), float(sp[1])))
        flags.append(False)
        edges.discard((min(c, a), max(c, a)))
        edges.discard((min(c, b), max(c, b)))
        for x in (a, b, c):
            edges.add((min(x, s), max(x, s)))

    g = collapse_degenerate_edges(np.array(pos), sorted(edges), n)
    # collapse keeps terminal flags by slot index; auxiliary slots start at n
    g.terminal_flags = [i < n for i in range(len(g.vertices))] if len(flags) == len(g.vertices) else g.terminal_flags
    return SteinerSolution(g, g.total_length(), exact=False)


@dataclass
class StructureReport:
    planar: bool
    steiner_degree_3: bool
    angles_ok: bool
    steiner_count_ok: bool
    steiner_in_hull: bool

    @property
    def all_ok(self) -> bool:
        return (self.planar and self.steiner_degree_3 and self.angles_ok
                and self.steiner_count_ok and self.steiner_in_hull)


def validate_smt_structure(sol: SteinerSolution, points: np.ndarray,
                           angle_tol: float = 1e-3) -> StructureReport:
    """Check the classical structural properties of a Steiner minimal tree."""
    g = sol.graph
    pos = g.vertices
    edges = g.edges
    planar = True
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            a, b = edges[i]
            c, d = edges[j]
            if len({a, b, c, d}) < 4:
                continue
            kind = segment_intersect((pos[a], pos[b]), (pos[c], pos[d]))
            if kind is IntersectionKind.PROPER:
                planar = False

    deg = [0] * len(pos)
    adj = [[] for _ in range(len(pos))]
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
        adj[u].append(v)
        adj[v].append(u)

    steiner_idx = [i for i, t in enumerate(g.terminal_flags) if not t]
    steiner_degree_3 = all(deg[i] == 3 for i in steiner_idx)

    min_angle = 2.0 * math.pi / 3.0 - angle_tol
    angles_ok = True
    for c in range(len(pos)):
        if deg[c] <= 1:
            continue
        for a, b in combinations(adj[c], 2):
            if _angle_at(pos, c, a, b) < min_angle:
                angles_ok = False

    n_terms = sum(g.terminal_flags)
    steiner_count_ok = len(steiner_idx) <= max(0, n_terms - 2)

    steiner_in_hull = True
    pts = np.asarray(points, dtype=float)
    try:
        hull = convex_hull(pts)
        for i in steiner_idx:
            if not point_in_polygon(pos[i], hull):
                # Allow hairline numerical excursions outside the hull.
                if point_to_polyline_distance(pos[i], hull) > 1e-9:
                    steiner_in_hull = False
    except GeometryError:
        pass  # collinear terminals: hull undefined, skip the check
    return StructureReport(planar, steiner_degree_3, angles_ok,
                           steiner_count_ok, steiner_in_hull)


def random_planar_tree(points: np.ndarray, seed: int) -> PlaneGraph:
    """Random spanning tree over the terminals with no crossing edges.

    Points are inserted in random order; each new point connects to a
    random pick among the two nearest earlier points whose connecting
    segment crosses no existing edge.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n < 2:
        raise GeometryError("need at least 2 points")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        order = rng.permutation(n)
        edges: list[tuple[int, int]] = []
        ok = True
        for step in range(1, n):
            p = order[step]
            cands = sorted(order[:step], key=lambda q: np.hypot(*(pts[p] - pts[q])))
            valid = []
            for q in cands:
                seg = (pts[p], pts[q])
                if all(segment_intersect(seg, (pts[u], pts[v]))
                       is not IntersectionKind.PROPER
                       for u, v in edges):
                    valid.append(q)
                    if len(valid) == 2:
                        break
            if not valid:
                ok = False
                break
            chosen = valid[rng.integers(len(valid))]
            edges.append((min(p, chosen), max(p, chosen)))
        if ok:
            return PlaneGraph(pts, sorted(edges))
    raise GeometryError("failed to build a random planar tree")
