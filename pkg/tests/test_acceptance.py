"""Acceptance criteria, one test (and one pass/fail line under -v) each.

Each test states its tolerance band inline and prints a one-line summary
with the measured values. Criteria that cannot be met on a CPU-only desk
(toy diffusion training) fail with an explanation; the analysis lives in
the decisions ledger.
"""
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from geopix.curves import generate_instance
from geopix.extract import SnapParams, extract_square, snap_square
from geopix.geometry import minimum_spanning_tree
from geopix.maxap import random_simple_polygon, solve_exact_dfs, solve_naive_oracle
from geopix.metrics import alignment_score, squareness
from geopix.pipeline import (
    MAXAP_MIN_SEP,
    STEINER_MIN_SEP,
    RunConfig,
    evaluate_image,
    generate_dataset,
    generate_one,
    sample_point_set,
)
from geopix.raster import blank, default_map, rasterize_square_pair
from geopix.steiner import solve_exact, validate_smt_structure


def _summary(name, ok, detail):
    print(f"[ACCEPTANCE] {name}: {detail} -> {'PASS' if ok else 'FAIL'}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Eq. 2 closed form: squareness(perfect square) = 1.0 exactly;
# squareness(2:1 rectangle) = e^-2 +- 1e-6.

def test_squareness_closed_form():
    img = blank(128, 0)
    img[30:70, 30:70] = 255
    q_square = squareness(img)
    img2 = blank(128, 0)
    img2[30:60, 20:80] = 255
    q_rect = squareness(img2)
    ok = q_square == 1.0 and abs(q_rect - math.exp(-2.0)) <= 1e-6
    _summary("eq2-closed-form", ok,
             f"square={q_square} (want exactly 1.0), "
             f"rect={q_rect:.8f} (want e^-2={math.exp(-2.0):.8f} +-1e-6)")


# ---------------------------------------------------------------------------
# Table 1 GT columns: >= 2000 raster pairs at 128x128, mean alignment (px)
# in [-0.35, 0.0] (paper -0.14), mean squareness in [0.90, 0.95]
# (paper 0.924). Runtime < 10 min.

def test_table1_ground_truth_columns():
    t0 = time.monotonic()
    wmap = default_map(128)
    aligns, qs = [], []
    seed = 0
    while len(aligns) < 2000:
        inst = generate_instance(seed)
        seed += 1
        curve_px = wmap.apply(inst.curve)
        for k in range(len(inst.squares)):
            _, simg = rasterize_square_pair(inst, k)
            quad = snap_square(extract_square(simg), curve_px, SnapParams())
            aligns.append(alignment_score(quad, curve_px))
            qs.append(squareness(simg))
            if len(aligns) >= 2000:
                break
    elapsed = time.monotonic() - t0
    a_mean, q_mean = float(np.mean(aligns)), float(np.mean(qs))
    ok = (-0.35 <= a_mean <= 0.0) and (0.90 <= q_mean <= 0.95) and elapsed < 600
    _summary("table1-gt", ok,
             f"pairs={len(aligns)}, mean_alignment={a_mean:.4f} px "
             f"(band [-0.35, 0.00]), mean_squareness={q_mean:.4f} "
             f"(band [0.90, 0.95]), elapsed={elapsed:.0f}s (<600s)")


# ---------------------------------------------------------------------------
# Steiner exact oracle: closed forms +-1e-6; 200 random n in [4,8]:
# SMT <= MST always, MST/SMT <= 1.22 always, structure all-pass
# (angle tol 1e-3 rad). Runtime < 5 min.

def test_steiner_exact_oracle():
    t0 = time.monotonic()
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    err_tri = abs(solve_exact(tri).total_length - math.sqrt(3))
    sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    err_sq = abs(solve_exact(sq).total_length - (1 + math.sqrt(3)))

    rng = np.random.default_rng(2024)
    dominated = structural = 0
    max_ratio = 0.0
    for _ in range(200):
        n = int(rng.integers(4, 9))
        pts = sample_point_set(rng, n, STEINER_MIN_SEP)
        sol = solve_exact(pts)
        mst = minimum_spanning_tree(pts).total_length()
        ratio = mst / sol.total_length
        max_ratio = max(max_ratio, ratio)
        dominated += sol.total_length <= mst + 1e-9
        structural += validate_smt_structure(sol, pts, angle_tol=1e-3).all_ok
    elapsed = time.monotonic() - t0
    ok = (err_tri <= 1e-6 and err_sq <= 1e-6 and dominated == 200
          and max_ratio <= 1.22 and structural == 200 and elapsed < 300)
    _summary("steiner-exact-oracle", ok,
             f"fermat_err={err_tri:.2e}, square_err={err_sq:.2e} (<=1e-6), "
             f"SMT<=MST {dominated}/200, max MST/SMT={max_ratio:.4f} (<=1.22), "
             f"structure {structural}/200, elapsed={elapsed:.0f}s (<300s)")


# ---------------------------------------------------------------------------
# Table 2 MST column analogue: mean MST/SMT over 200 n in [5,8] instances
# in [1.00, 1.16]. Runtime < 5 min.

def test_mst_ratio_band():
    t0 = time.monotonic()
    rng = np.random.default_rng(777)
    ratios = []
    for _ in range(200):
        n = int(rng.integers(5, 9))
        pts = sample_point_set(rng, n, STEINER_MIN_SEP)
        smt = solve_exact(pts).total_length
        mst = minimum_spanning_tree(pts).total_length()
        ratios.append(mst / smt)
    elapsed = time.monotonic() - t0
    mean = float(np.mean(ratios))
    ok = 1.00 <= mean <= 1.16 and max(ratios) <= 1.22 and elapsed < 300
    _summary("table2-mst-ratio", ok,
             f"mean MST/SMT={mean:.4f} (band [1.00, 1.16]), "
             f"max={max(ratios):.4f} (<=1.22), elapsed={elapsed:.0f}s (<300s)")


# ---------------------------------------------------------------------------
# MAXAP oracle equivalence: DFS area = naive area, exact equality,
# 100 random n in [5,8] instances. Runtime < 10 min.

def test_maxap_oracle_equivalence():
    t0 = time.monotonic()
    rng = np.random.default_rng(99)
    equal = 0
    for _ in range(100):
        n = int(rng.integers(5, 9))
        pts = sample_point_set(rng, n, MAXAP_MIN_SEP, collinear_tol=1e-4)
        equal += solve_exact_dfs(pts).area == solve_naive_oracle(pts).area
    elapsed = time.monotonic() - t0
    ok = equal == 100 and elapsed < 600
    _summary("maxap-oracle-equivalence", ok,
             f"exact equality {equal}/100, elapsed={elapsed:.0f}s (<600s)")


# ---------------------------------------------------------------------------
# Table 3 random-polygon analogue: mean random/optimal area ratio over
# 200 n in [7,12] instances in [0.63, 0.88] (paper 0.7711). Runtime < 15 min.

def test_random_polygon_ratio_band():
    t0 = time.monotonic()
    rng = np.random.default_rng(4242)
    ratios = []
    for i in range(200):
        n = int(rng.integers(7, 13))
        pts = sample_point_set(rng, n, MAXAP_MIN_SEP, collinear_tol=1e-4)
        opt = solve_exact_dfs(pts).area
        ratios.append(random_simple_polygon(pts, seed=i).area / opt)
    elapsed = time.monotonic() - t0
    mean = float(np.mean(ratios))
    ok = 0.63 <= mean <= 0.88 and elapsed < 900
    _summary("table3-random-polygon-ratio", ok,
             f"mean random/optimal={mean:.4f} (band [0.63, 0.88]), "
             f"elapsed={elapsed:.0f}s (<900s)")


# ---------------------------------------------------------------------------
# Round-trip fidelity: rasterize -> extract reproduces oracle structures
# on >= 99/100 instances per task (exact edge/cycle sets, vertices within
# 1 px; square corners within 1 px). Runtime < 5 min.

def test_round_trip_fidelity():
    t0 = time.monotonic()
    results = {}

    wmap = default_map(128)
    ok_sq = 0
    for seed in range(100):
        inst = generate_instance(seed)
        _, simg = rasterize_square_pair(inst, 0)
        got = extract_square(simg)
        ref = wmap.apply(inst.squares[0].vertices)
        d = np.linalg.norm(got[:, None] - ref[None, :], axis=2)
        ok_sq += max(d.min(axis=1).max(), d.min(axis=0).max()) <= 1.0
    results["square"] = ok_sq

    for task, pmin, pmax in (("steiner", 4, 8), ("maxap", 5, 8)):
        cfg = RunConfig(task=task, points_min=pmin, points_max=pmax, seed=11)
        good = 0
        for i in range(100):
            man, _, sol = generate_one(cfg, i)
            rec = evaluate_image(man, sol, cfg)
            good += bool(rec.valid and rec.optimal_match)
        results[task] = good
    elapsed = time.monotonic() - t0
    ok = all(v >= 99 for v in results.values()) and elapsed < 300
    _summary("round-trip-fidelity", ok,
             f"square={results['square']}/100, steiner={results['steiner']}/100, "
             f"maxap={results['maxap']}/100 (each >=99), "
             f"elapsed={elapsed:.0f}s (<300s)")


# ---------------------------------------------------------------------------
# Snapping monotonicity: 500 synthetic off-by-(<=3px, <=0.1rad) quads;
# never decreases alignment; recovers >= 80% of the injected offset on
# average. Runtime < 2 min.

def test_snapping_monotonic_and_recovery():
    t0 = time.monotonic()
    rng = np.random.default_rng(31337)
    wmap = default_map(128)
    monotonic = 0
    recoveries = []
    seed = 0
    for _ in range(500):
        inst = generate_instance(seed)
        seed += 1
        curve_px = wmap.apply(inst.curve)
        _, simg = rasterize_square_pair(inst, 0)
        quad = extract_square(simg)
        base = alignment_score(quad, curve_px)
        th = rng.uniform(-0.1, 0.1)
        t = rng.uniform(-3.0, 3.0, 2)
        c = quad.mean(axis=0)
        rot = np.array([[math.cos(th), -math.sin(th)],
                        [math.sin(th), math.cos(th)]])
        off = (quad - c) @ rot.T + c + t
        s_off = alignment_score(off, curve_px)
        s_snap = alignment_score(snap_square(off, curve_px, SnapParams()),
                                 curve_px)
        monotonic += s_snap >= s_off - 1e-12
        if s_off < base:  # offset actually hurt; measure score recovered
            recoveries.append(min(1.0, (s_snap - s_off) / (base - s_off)))
    elapsed = time.monotonic() - t0
    mean_rec = float(np.mean(recoveries))
    ok = monotonic == 500 and mean_rec >= 0.80 and elapsed < 120
    _summary("snap-monotonic-recovery", ok,
             f"monotonic {monotonic}/500, mean offset recovery={mean_rec:.3f} "
             f"(>=0.80), elapsed={elapsed:.0f}s (<120s)")


# ---------------------------------------------------------------------------
# End-to-end determinism: two `gen` runs with identical seed/config produce
# byte-identical shards (checksum equality).

def test_gen_determinism(tmp_path):
    sums = []
    for sub in ("a", "b"):
        cfg = RunConfig(task="maxap", count=8, points_min=5, points_max=8,
                        seed=123, out=str(tmp_path / sub))
        generate_dataset(cfg)
        sums.append((tmp_path / sub / "maxap/train/shard_00000/SHA256SUMS")
                    .read_text())
    ok = sums[0] == sums[1]
    _summary("gen-determinism", ok,
             f"checksum files {'identical' if ok else 'DIFFER'} across two runs")


# ---------------------------------------------------------------------------
# SECONDARY: scheduler correctness — true-noise-oracle DDIM sampling
# recovers x0 within 1e-4 without trained weights.

def test_secondary_scheduler_true_noise_oracle():
    torch = pytest.importorskip("torch")
    from geopix_diffusion.scheduler import DiffusionSchedule, ddim_sample_oracle

    sched = DiffusionSchedule()
    g = torch.Generator().manual_seed(0)
    x0 = torch.rand(2, 1, 64, 64, generator=g) * 2 - 1
    recon = ddim_sample_oracle(x0, sched, seed=1)
    err = float((recon - x0).abs().max())
    ok = err <= 1e-4
    _summary("secondary-scheduler-oracle",
             ok, f"max |x0_recon - x0|={err:.2e} (<=1e-4)")


# ---------------------------------------------------------------------------
# SECONDARY: U-Net shape contract at 64 and 128; seeded sampling
# determinism (byte-identical PNGs).

def test_secondary_shapes_and_determinism(tmp_path):
    torch = pytest.importorskip("torch")
    from geopix_diffusion.sampler import sample_to_png
    from geopix_diffusion.scheduler import DiffusionSchedule
    from geopix_diffusion.unet import UNetConfig, build_unet

    for res in (64, 128):
        model = build_unet(UNetConfig())
        x = torch.zeros(1, 2, res, res)
        t = torch.zeros(1, dtype=torch.long)
        with torch.no_grad():
            out = model(x, t)
        assert out.shape == (1, 1, res, res), out.shape

    model = build_unet(UNetConfig())
    cond = torch.zeros(1, 1, 64, 64)
    sched = DiffusionSchedule()
    p1 = sample_to_png(model, cond, sched, seed=7, out_path=tmp_path / "a.png")
    p2 = sample_to_png(model, cond, sched, seed=7, out_path=tmp_path / "b.png")
    ok = p1.read_bytes() == p2.read_bytes()
    _summary("secondary-shape-determinism", ok,
             "I/O contract 64/128 ok; same-seed PNGs "
             + ("byte-identical" if ok else "DIFFER"))


# ---------------------------------------------------------------------------
# SECONDARY: toy training signal. Requires ~GPU-hours; not reproducible on
# this CPU-only desk. The test evaluates artifacts of a completed toy run
# (GEOPIX_TOY_RUN_DIR); without them it fails honestly.

def test_secondary_toy_training_signal():
    run_dir = os.environ.get("GEOPIX_TOY_RUN_DIR")
    if not run_dir:
        _summary("secondary-toy-training", False,
                 "no completed toy run found (set GEOPIX_TOY_RUN_DIR to a "
                 "`geopix-diffusion train` output dir); the 5k-instance/"
                 "20-epoch criterion needs single-GPU hours and this desk "
                 "is CPU-only — see the decisions ledger")
        return
    import json
    losses = json.loads((Path(run_dir) / "loss_log.json").read_text())
    epoch_means = [float(np.mean(v)) for v in losses["epochs"]]
    decreasing = all(b < a for a, b in zip(epoch_means[:5], epoch_means[1:6]))
    report = json.loads((Path(run_dir) / "eval_report.json").read_text())
    valid_rate = report[0]["valid_rate"]
    ok = decreasing and valid_rate >= 0.3
    _summary("secondary-toy-training", ok,
             f"first-5-epoch means strictly decreasing={decreasing}, "
             f"best-of-10 valid rate={valid_rate:.3f} (>=0.3)")
