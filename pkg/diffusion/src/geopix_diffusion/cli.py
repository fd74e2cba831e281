"""Command line entry points: train, sample, compare."""
import argparse
import json
import sys
from pathlib import Path

import torch

from .data import list_instances, load_image
from .sampler import sample_to_png, write_samples_manifest
from .scheduler import DiffusionSchedule
from .train import TrainConfig, ddim_train, load_checkpoint, regression_train


def _add_train(sub):
    p = sub.add_parser("train", help="train the conditional denoiser")
    p.add_argument("--data-root", required=True)
    p.add_argument("--task", default="maxap")
    p.add_argument("--split", default="train")
    p.add_argument("--res", type=int, default=64)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=6e-4)
    p.add_argument("--grad-accum", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--out", default="runs/ddim")
    p.add_argument("--objective", choices=["ddim", "regression"],
                   default="ddim")


def _add_sample(sub):
    p = sub.add_parser("sample", help="sample solutions for a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data-root", required=True)
    p.add_argument("--task", default="maxap")
    p.add_argument("--split", default="val")
    p.add_argument("--res", type=int, default=64)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="samples")


def _add_compare(sub):
    p = sub.add_parser("compare", help="tabulate loss logs from run dirs")
    p.add_argument("runs", nargs="+")


def _cfg_from_args(args) -> TrainConfig:
    return TrainConfig(data_root=args.data_root, task=args.task,
                       split=args.split, resolution=args.res,
                       epochs=args.epochs, batch_size=args.batch_size,
                       lr=args.lr, grad_accum=args.grad_accum,
                       seed=args.seed, limit=args.limit, out_dir=args.out)


def cmd_train(args) -> int:
    cfg = _cfg_from_args(args)
    if args.objective == "regression":
        out = regression_train(cfg)
    else:
        out = ddim_train(cfg)
    print(f"run complete: {out}")
    return 0


def cmd_sample(args) -> int:
    model, payload = load_checkpoint(Path(args.checkpoint))
    sched = DiffusionSchedule()
    instances = list_instances(Path(args.data_root), args.task, args.split)
    if args.limit is not None:
        instances = instances[: args.limit]
    out_dir = Path(args.out)
    rows = []
    with torch.no_grad():
        for inst in instances:
            cond = load_image(inst.cond_path, args.res)[None]
            name = f"{args.task}_{inst.instance_id}_{args.seed}.png"
            sample_to_png(model, cond, sched, seed=args.seed,
                          out_path=out_dir / name)
            rows.append({"instance_id": inst.instance_id,
                         "seed": args.seed, "file": name})
    manifest = write_samples_manifest(rows, out_dir / "samples.jsonl")
    print(f"wrote {len(rows)} samples; manifest at {manifest}")
    return 0


def cmd_compare(args) -> int:
    for run in args.runs:
        log = Path(run) / "loss_log.json"
        if not log.exists():
            print(f"{run}: no loss_log.json")
            continue
        epochs = json.loads(log.read_text())["epochs"]
        print(f"{run}: {len(epochs)} epochs, first={epochs[0]:.4f}, "
              f"last={epochs[-1]:.4f}")
    return 0


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="geopix-diffusion")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_train(sub)
    _add_sample(sub)
    _add_compare(sub)
    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "sample":
            return cmd_sample(args)
        return cmd_compare(args)
    except Exception as exc:  # surface errors as exit status for scripts
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(run())
