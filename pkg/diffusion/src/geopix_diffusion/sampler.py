"""Deterministic DDIM sampling to PNG, plus samples-manifest export."""
import json
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .scheduler import DiffusionSchedule, ddim_sample


def tensor_to_png_array(x: torch.Tensor) -> np.ndarray:
    """(1, H, W) or (H, W) tensor in [-1, 1] -> uint8 grayscale array."""
    arr = x.detach().cpu().numpy()
    arr = np.squeeze(arr)
    arr = np.clip((arr + 1.0) * 127.5, 0.0, 255.0)
    return np.round(arr).astype(np.uint8)


def sample_to_png(model: torch.nn.Module, cond: torch.Tensor,
                  sched: DiffusionSchedule, seed: int, out_path: Path) -> Path:
    """Run DDIM conditioned on `cond` ((1, 1, H, W) in [-1, 1]) and write the
    decoded sample as an 8-bit grayscale PNG.  Same seed -> same bytes."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    x0 = ddim_sample(model, cond, sched, seed=seed)
    Image.fromarray(tensor_to_png_array(x0[0]), mode="L").save(out_path)
    return out_path


def write_samples_manifest(rows: list[dict], manifest_path: Path) -> Path:
    """Write a JSONL samples manifest consumable by the dataset evaluator.
    Each row: {instance_id, seed, file} with `file` relative to the
    manifest's parent directory."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    with open(manifest_path, "w") as fh:
        for row in rows:
            fh.write(json.dumps({"instance_id": row["instance_id"],
                                 "seed": int(row["seed"]),
                                 "file": str(row["file"])}) + "\n")
    return manifest_path
