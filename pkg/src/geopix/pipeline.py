"""End-to-end orchestration: instance generation, solving, evaluation.

Every instance derives its own seed from (root seed, index), so shard
contents are fully determined by (seed, config) regardless of worker
scheduling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curves, maxap, steiner
from .dataset import InstanceManifest, SHARD_SIZE, load_png, read_shard, shard_dirs, write_shard
from .extract import (
    ExtractionError,
    ExtractionThresholds,
    SnapParams,
    detect_nodes,
    extract_graph,
    extract_polygon,
    extract_square,
    snap_square,
)
from .geometry import PlaneGraph, is_tree, point_segment_distance, shoelace_area
from .metrics import EvalRecord, alignment_score, best_of_k, squareness
from .raster import (
    default_map,
    rasterize_polygon_pair,
    rasterize_square_pair,
    rasterize_steiner_pair,
)

log = logging.getLogger("geopix")

# Minimum pairwise separations, chosen so r=2 node disks never merge at the
# default 128 px raster (window spans 2.2 world units): 6 px and 8 px.
STEINER_MIN_SEP = 6.0 * 2.2 / 128.0
MAXAP_MIN_SEP = 8.0 * 2.2 / 128.0
COLLINEAR_TOL = 1e-4


@dataclass
class RunConfig:
    task: str
    count: int = 100
    points_min: int = 7
    points_max: int = 12
    seed: int = 0
    resolution: int = 128
    out: str = "out"
    split: str = "train"
    workers: int = 1
    mode: str = "exact"            # exact | heuristic | mst | random
    best_of: int = 10
    thresholds: ExtractionThresholds = field(default_factory=ExtractionThresholds)
    snap: SnapParams = field(default_factory=SnapParams)


def derive_seed(root_seed: int, index: int) -> int:
    return int((root_seed * 1_000_003 + index * 7919 + 1) % (2 ** 63))


def sample_point_set(rng: np.random.Generator, n: int, min_sep: float,
                     collinear_tol: float | None = None,
                     max_tries: int = 10_000) -> np.ndarray:
    """Uniform points in [-1, 1]^2 with rejection for separation/collinearity."""
    for _ in range(max_tries):
        pts = rng.uniform(-1.0, 1.0, size=(n, 2))
        d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        np.fill_diagonal(d, np.inf)
        if d.min() < min_sep:
            continue
        if collinear_tol is not None and _has_near_collinear_triple(pts, collinear_tol):
            continue
        return pts
    raise RuntimeError("rejection sampling failed for point set")


def _has_near_collinear_triple(pts: np.ndarray, tol: float) -> bool:
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if point_segment_distance(pts[k], pts[i], pts[j]) < tol \
                        or point_segment_distance(pts[i], pts[j], pts[k]) < tol \
                        or point_segment_distance(pts[j], pts[i], pts[k]) < tol:
                    return True
    return False


# ---------------------------------------------------------------------------
# Generation

def generate_one(cfg: RunConfig, index: int):
    """Build (manifest, condition image, solution image) for one instance."""
    seed = derive_seed(cfg.seed, index)
    iid = f"{cfg.task}_{cfg.split}_{index:08d}"
    wmap = default_map(cfg.resolution)

    if cfg.task == "square":
        inst = curves.generate_instance(seed)
        rng = np.random.default_rng(seed + 1)
        target = int(rng.integers(len(inst.squares)))
        cond, sol = rasterize_square_pair(inst, target, cfg.resolution)
        man = InstanceManifest(
            task="square", instance_id=iid, seed=seed, resolution=cfg.resolution,
            world_to_pixel=wmap.as_tuple(),
            cond_path=f"{iid}_cond.png", sol_path=f"{iid}_sol.png",
            geometry={
                "curve": inst.curve.tolist(),
                "squares": [{"center": list(s.center), "side": s.side,
                             "rotation": s.rotation} for s in inst.squares],
                "target_square": target,
                "is_circle": inst.is_circle,
            })
        return man, cond, sol

    rng = np.random.default_rng(seed)
    n = int(rng.integers(cfg.points_min, cfg.points_max + 1))

    if cfg.task == "steiner":
        pts = sample_point_set(rng, n, STEINER_MIN_SEP)
        if n <= steiner.EXACT_MAX_TERMINALS:
            sol_t = steiner.solve_exact(pts)
        else:
            sol_t = steiner.solve_heuristic(pts)
        cond, sol = rasterize_steiner_pair(pts, sol_t.graph, cfg.resolution)
        man = InstanceManifest(
            task="steiner", instance_id=iid, seed=seed, resolution=cfg.resolution,
            world_to_pixel=wmap.as_tuple(),
            cond_path=f"{iid}_cond.png", sol_path=f"{iid}_sol.png",
            points=pts.tolist(),
            geometry={
                "vertices": sol_t.graph.vertices.tolist(),
                "edges": [[int(i), int(j)] for i, j in sol_t.graph.edges],
                "terminal_flags": [bool(f) for f in sol_t.graph.terminal_flags],
                "length": float(sol_t.total_length),
                "exact": sol_t.exact,
            })
        return man, cond, sol

    if cfg.task == "maxap":
        pts = sample_point_set(rng, n, MAXAP_MIN_SEP, COLLINEAR_TOL)
        res = maxap.solve_exact_dfs(pts)
        cond, sol = rasterize_polygon_pair(pts, res.polygon, cfg.resolution)
        man = InstanceManifest(
            task="maxap", instance_id=iid, seed=seed, resolution=cfg.resolution,
            world_to_pixel=wmap.as_tuple(),
            cond_path=f"{iid}_cond.png", sol_path=f"{iid}_sol.png",
            points=pts.tolist(),
            geometry={"order": [int(i) for i in res.order], "area": res.area})
        return man, cond, sol

    raise ValueError(f"unknown task {cfg.task!r}")


def generate_dataset(cfg: RunConfig) -> list[Path]:
    """Generate cfg.count instances and write them into shards."""
    root = Path(cfg.out)
    written = []
    triples = []
    shard_idx = 0
    failures = 0
    for index in range(cfg.count):
        try:
            triples.append(generate_one(cfg, index))
        except Exception as exc:  # per-instance failure: log, continue
            failures += 1
            log.warning("instance %d failed: %s", index, exc)
            continue
        if len(triples) == SHARD_SIZE:
            written.append(_flush_shard(root, cfg, shard_idx, triples))
            triples = []
            shard_idx += 1
    if triples or shard_idx == 0:
        written.append(_flush_shard(root, cfg, shard_idx, triples))
    if failures:
        log.warning("%d/%d instances failed during generation", failures, cfg.count)
    return written


def _flush_shard(root: Path, cfg: RunConfig, shard_idx: int, triples) -> Path:
    shard_dir = root / cfg.task / cfg.split / f"shard_{shard_idx:05d}"
    summary = write_shard(triples, shard_dir)
    log.info("wrote %s (%d instances)", shard_dir, summary["count"])
    return shard_dir


# ---------------------------------------------------------------------------
# Oracle reconstruction from manifests

def manifest_graph(man: InstanceManifest) -> PlaneGraph:
    g = man.geometry
    return PlaneGraph(np.array(g["vertices"]), [tuple(e) for e in g["edges"]],
                      list(g["terminal_flags"]))


def rerasterize(man: InstanceManifest):
    """Re-render the stored geometry; must match the stored PNGs byte for byte."""
    if man.task == "square":
        g = man.geometry
        inst = curves.CurveInstance(
            curve=np.array(g["curve"]),
            squares=[curves.InscribedSquare(tuple(s["center"]), s["side"], s["rotation"])
                     for s in g["squares"]],
            scale=1.0, translation=(0.0, 0.0), is_circle=g["is_circle"], seed=man.seed)
        return rasterize_square_pair(inst, g["target_square"], man.resolution)
    if man.task == "steiner":
        return rasterize_steiner_pair(np.array(man.points), manifest_graph(man),
                                      man.resolution)
    if man.task == "maxap":
        pts = np.array(man.points)
        return rasterize_polygon_pair(pts, pts[man.geometry["order"]], man.resolution)
    raise ValueError(f"unknown task {man.task!r}")


# ---------------------------------------------------------------------------
# Solving from manifests (baselines and re-solves)

def solve_manifest(man: InstanceManifest, mode: str, seed: int = 0):
    """Solve one instance with the requested solver/baseline.

    Returns (PlaneGraph or order list, objective value).
    """
    pts = np.array(man.points)
    if man.task == "steiner":
        if mode == "exact":
            s = steiner.solve_exact(pts)
            return s.graph, s.total_length
        if mode == "heuristic":
            s = steiner.solve_heuristic(pts)
            return s.graph, s.total_length
        if mode == "mst":
            from .geometry import minimum_spanning_tree
            g = minimum_spanning_tree(pts)
            return g, g.total_length()
        if mode == "random":
            g = steiner.random_planar_tree(pts, seed)
            return g, g.total_length()
    if man.task == "maxap":
        if mode == "exact":
            r = maxap.solve_exact_dfs(pts)
            return r.order, r.area
        if mode == "random":
            r = maxap.random_simple_polygon(pts, seed)
            return r.order, r.area
    raise ValueError(f"unsupported mode {mode!r} for task {man.task!r}")


# ---------------------------------------------------------------------------
# Evaluation

def _canonical_cycle(order):
    return maxap._canonical_cycle(list(order))


def evaluate_image(man: InstanceManifest, img: np.ndarray, cfg: RunConfig,
                   seed: int = 0) -> EvalRecord:
    """Extract a structure from one solution image and score it."""
    from .raster import WorldToPixel
    wmap = WorldToPixel(*man.world_to_pixel)
    th = cfg.thresholds
    iid = man.instance_id

    if man.task == "square":
        curve_px = wmap.apply(np.array(man.geometry["curve"]))
        try:
            quad = extract_square(img)
        except ExtractionError:
            return EvalRecord(iid, seed, valid=False)
        snapped = snap_square(quad, curve_px, cfg.snap)
        align = alignment_score(snapped, curve_px)
        try:
            sq = squareness(img)
        except Exception:
            sq = None
        return EvalRecord(iid, seed, valid=True, primary_value=align,
                          squareness=sq, n_points=None)

    if man.task == "steiner":
        pts = np.array(man.points)
        terms_px = wmap.apply(pts)
        nodes = detect_nodes(img, terms_px, th)
        if len(nodes) == 0:
            return EvalRecord(iid, seed, valid=False, n_points=len(pts))
        graph_px = extract_graph(img, nodes, th)
        node_world = wmap.invert(graph_px.vertices)
        # A valid solution is a tree whose vertex set covers every terminal.
        covered = all(
            min(np.linalg.norm(node_world - p, axis=1)) < 1.5 / abs(wmap.a)
            for p in pts)
        valid = is_tree(graph_px) and covered
        length = PlaneGraph(node_world, graph_px.edges).total_length() if valid else None
        opt_len = man.geometry.get("length")
        ratio = (length / opt_len) if (valid and opt_len) else None
        match = valid and _graphs_match(man, graph_px, node_world, pts)
        return EvalRecord(iid, seed, valid=valid, primary_value=length,
                          ratio_vs_optimal=ratio, optimal_match=match,
                          n_points=len(pts))

    if man.task == "maxap":
        pts = np.array(man.points)
        pts_px = wmap.apply(pts)
        try:
            order = extract_polygon(img, pts_px, th)
        except ExtractionError:
            return EvalRecord(iid, seed, valid=False, n_points=len(pts))
        area = shoelace_area(pts[order])
        opt_area = man.geometry.get("area")
        ratio = area / opt_area if opt_area else None
        match = _canonical_cycle(order) == _canonical_cycle(man.geometry["order"])
        return EvalRecord(iid, seed, valid=True, primary_value=area,
                          ratio_vs_optimal=ratio, optimal_match=match,
                          n_points=len(pts))

    raise ValueError(f"unknown task {man.task!r}")


CONTRACT_PX = 3.0  # r=2 node disks closer than this cannot be told apart


def _contract_graph(vertices: np.ndarray, edges, flags, max_len: float):
    """Union-find contraction of edges shorter than max_len.

    Returns (vertex positions, edge set, original-index -> class index).
    A class containing a terminal keeps that terminal's exact position.
    """
    m = len(vertices)
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        if np.hypot(*(vertices[u] - vertices[v])) < max_len:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
    classes = sorted({find(i) for i in range(m)})
    remap = {c: i for i, c in enumerate(classes)}
    cls = [remap[find(i)] for i in range(m)]
    pos = np.zeros((len(classes), 2))
    for c in range(len(classes)):
        members = [i for i in range(m) if cls[i] == c]
        terms = [i for i in members if flags and flags[i]]
        pos[c] = vertices[terms[0]] if terms else vertices[members].mean(axis=0)
    eset = {(min(cls[u], cls[v]), max(cls[u], cls[v]))
            for u, v in edges if cls[u] != cls[v]}
    return pos, eset, cls


def _graphs_match(man: InstanceManifest, graph_px: PlaneGraph,
                  node_world: np.ndarray, terminals: np.ndarray) -> bool:
    """Edge-set equality at raster precision.

    Oracle vertices joined by an edge shorter than the disk-merge limit
    rasterize to a single blob, so the oracle graph is compared after
    contracting such edges; extracted nodes map many-to-one onto the
    contracted vertices and edges are compared on the quotient.
    """
    ref = manifest_graph(man)
    px = abs(man.world_to_pixel[0])
    rpos, redges, cls = _contract_graph(ref.vertices, ref.edges,
                                        ref.terminal_flags, CONTRACT_PX / px)
    tol = 2.0 / px
    mapping = []
    for p in node_world:
        d = np.linalg.norm(ref.vertices - p, axis=1)
        j = int(np.argmin(d))
        if d[j] > tol:
            return False
        mapping.append(cls[j])
    if set(mapping) != set(range(len(rpos))):
        return False
    mapped = {(min(mapping[i], mapping[j]), max(mapping[i], mapping[j]))
              for i, j in graph_px.edges if mapping[i] != mapping[j]}
    return mapped == redges


def evaluate_shards(root: Path, cfg: RunConfig,
                    samples: dict[str, list[tuple[int, Path]]] | None = None
                    ) -> list[EvalRecord]:
    """Evaluate each instance, best-of-k over sample images when provided.

    ``samples`` maps instance_id to (seed, png path) pairs; without it the
    stored oracle solution images are evaluated (self-consistency).
    """
    objective = "min_length" if cfg.task == "steiner" else "max_area"
    records = []
    for shard in shard_dirs(root, cfg.task, cfg.split):
        for man in read_shard(shard, verify=False):
            if samples is None:
                img = load_png(shard / man.sol_path)
                records.append(evaluate_image(man, img, cfg))
            else:
                cand = []
                for seed, path in samples.get(man.instance_id, []):
                    cand.append(evaluate_image(man, load_png(path), cfg, seed))
                if not cand:
                    continue
                if cfg.task == "square":
                    # Squares have no single optimum: keep best alignment.
                    valid = [r for r in cand if r.valid]
                    records.append(max(valid, key=lambda r: r.primary_value)
                                   if valid else cand[0])
                else:
                    records.append(best_of_k(cand, objective))
    return records
