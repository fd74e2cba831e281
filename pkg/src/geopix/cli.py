"""Command-line entry point.

Subcommands: gen (datasets), solve (oracles/baselines over a manifest),
extract (images -> structures), eval (best-of-k reports + figures),
render (side-by-side comparison panels). Verbosity via GEOPIX_LOG.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .dataset import load_png, read_shard, shard_dirs
from .extract import ExtractionThresholds, SnapParams
from .metrics import aggregate_report, write_report
from .pipeline import (
    RunConfig,
    evaluate_image,
    evaluate_shards,
    generate_dataset,
    rerasterize,
    solve_manifest,
)

log = logging.getLogger("geopix")


def _setup_logging():
    level = os.environ.get("GEOPIX_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_range(text: str) -> tuple[int, int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return int(lo), int(hi)
    v = int(text)
    return v, v


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(task=args.task)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
        valid = {f.name for f in fields(RunConfig)}
        cfg = replace(cfg, **{k: v for k, v in data.items() if k in valid})
    if getattr(args, "count", None) is not None:
        cfg.count = args.count
    if getattr(args, "points", None):
        cfg.points_min, cfg.points_max = _parse_range(args.points)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "res", None) is not None:
        cfg.resolution = args.res
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "best_of", None) is not None:
        cfg.best_of = args.best_of
    if getattr(args, "split", None):
        cfg.split = args.split
    if getattr(args, "thresholds", None):
        overrides = json.loads(args.thresholds)
        th_fields = {f.name for f in fields(ExtractionThresholds)}
        sn_fields = {f.name for f in fields(SnapParams)}
        cfg.thresholds = replace(cfg.thresholds,
                                 **{k: v for k, v in overrides.items() if k in th_fields})
        cfg.snap = replace(cfg.snap,
                           **{k: v for k, v in overrides.items() if k in sn_fields})
    return cfg


def cmd_gen(args) -> int:
    cfg = _config_from_args(args)
    shards = generate_dataset(cfg)
    print(f"wrote {len(shards)} shard(s) under {cfg.out}/{cfg.task}/{cfg.split}")
    return 0


def cmd_solve(args) -> int:
    cfg = _config_from_args(args)
    failures = 0
    results = []
    for shard in shard_dirs(Path(cfg.out), cfg.task, cfg.split):
        for man in read_shard(shard, verify=False):
            try:
                _, value = solve_manifest(man, cfg.mode, seed=cfg.seed)
                results.append({"instance_id": man.instance_id, "value": value})
            except Exception as exc:
                failures += 1
                print(f"{man.instance_id}: {exc}", file=sys.stderr)
    out_path = Path(cfg.out) / f"{cfg.task}_{cfg.split}_solve_{cfg.mode}.jsonl"
    with open(out_path, "w") as fh:
        for row in results:
            fh.write(json.dumps(row) + "\n")
    print(f"solved {len(results)} instance(s), {failures} failure(s) -> {out_path}")
    return 0 if failures == 0 else 1


def cmd_extract(args) -> int:
    cfg = _config_from_args(args)
    rows = []
    failures = 0
    for shard in shard_dirs(Path(cfg.out), cfg.task, cfg.split):
        for man in read_shard(shard, verify=False):
            img = load_png(shard / man.sol_path)
            rec = evaluate_image(man, img, cfg)
            rows.append(rec)
            if not rec.valid:
                failures += 1
    out_path = Path(cfg.out) / f"{cfg.task}_{cfg.split}_extract.jsonl"
    with open(out_path, "w") as fh:
        for rec in rows:
            fh.write(json.dumps(rec.__dict__) + "\n")
    print(f"extracted {len(rows)} instance(s), {failures} invalid -> {out_path}")
    return 0


def _load_samples(path: Path) -> dict:
    """Samples manifest: JSONL of {instance_id, seed, file} records."""
    samples: dict[str, list] = {}
    base = Path(path).parent
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            samples.setdefault(row["instance_id"], []).append(
                (int(row.get("seed", 0)), base / row["file"]))
    for v in samples.values():
        v.sort()
    return samples


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    samples = _load_samples(Path(args.samples)) if args.samples else None
    if samples is not None:
        for k in samples:
            samples[k] = samples[k][:cfg.best_of]
    records = evaluate_shards(Path(cfg.out), cfg, samples)
    if not records:
        print("no records to evaluate", file=sys.stderr)
        return 1
    buckets = None
    if args.buckets:
        buckets = [_parse_range(b) for b in args.buckets.split(",")]
    rows = aggregate_report(records, buckets)
    report_dir = Path(cfg.out)
    csv_path = report_dir / f"{cfg.task}_{cfg.split}_report.csv"
    json_path = report_dir / f"{cfg.task}_{cfg.split}_report.json"
    write_report(rows, csv_path, json_path)
    ratios = [r.ratio_vs_optimal for r in records if r.ratio_vs_optimal is not None]
    if ratios:
        from .figures import render_ratio_histogram
        fig_path = report_dir / f"{cfg.task}_{cfg.split}_ratio_hist.png"
        render_ratio_histogram(ratios, fig_path, cfg.task)
    for row in rows:
        print(f"{row.bucket}: n={row.count} valid_rate={row.valid_rate:.3f} "
              f"ratio={row.ratio_mean} +- {row.ratio_std} "
              f"optimal_rate={row.optimal_rate}")
    print(f"report -> {csv_path}")
    return 0


def cmd_render(args) -> int:
    cfg = _config_from_args(args)
    from .figures import render_comparison
    count = 0
    out_dir = Path(args.figures_out or cfg.out) / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = _load_samples(Path(args.samples)) if args.samples else None
    for shard in shard_dirs(Path(cfg.out), cfg.task, cfg.split):
        for man in read_shard(shard, verify=False):
            if count >= args.limit:
                break
            optimal = load_png(shard / man.sol_path)
            if samples and man.instance_id in samples:
                produced = load_png(samples[man.instance_id][0][1])
            else:
                _, produced = rerasterize(man)
            render_comparison(optimal, produced,
                              out_dir / f"{man.instance_id}_compare.png",
                              title=man.instance_id)
            count += 1
    print(f"rendered {count} figure(s) -> {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geopix",
                                description="geometric problem pipeline toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--task", required=True, choices=["square", "steiner", "maxap"])
        sp.add_argument("--count", type=int)
        sp.add_argument("--points", help="point count range A..B")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--res", type=int)
        sp.add_argument("--out")
        sp.add_argument("--split")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--thresholds", help="JSON overrides for extraction/snap params")
        sp.add_argument("--config", help="JSON config file (flags take precedence)")

    sp = sub.add_parser("gen", help="generate a dataset")
    common(sp)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("solve", help="run a solver/baseline over stored instances")
    common(sp)
    sp.add_argument("--mode", choices=["exact", "heuristic", "mst", "random"])
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("extract", help="extract structures from stored images")
    common(sp)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("eval", help="evaluate and write reports")
    common(sp)
    sp.add_argument("--samples", help="samples manifest JSONL (model outputs)")
    sp.add_argument("--best-of", dest="best_of", type=int, default=10)
    sp.add_argument("--buckets", help="comma-separated point buckets, e.g. 7..12,13..15")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("render", help="render comparison figures")
    common(sp)
    sp.add_argument("--samples", help="samples manifest JSONL (model outputs)")
    sp.add_argument("--limit", type=int, default=8)
    sp.add_argument("--figures-out", dest="figures_out")
    sp.set_defaults(func=cmd_render)
    return p


def run(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        log.error("%s", exc)
        return 2


def main():  # console script entry
    raise SystemExit(run())


if __name__ == "__main__":
    main()
