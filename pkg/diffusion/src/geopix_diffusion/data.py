"""Reader for geopix dataset shards (external contract: directory layout
``{root}/{task}/{split}/shard_{k:05}/`` with ``manifest.jsonl`` plus one
condition and one solution PNG per instance)."""
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image


@dataclass
class Instance:
    instance_id: str
    cond_path: Path
    sol_path: Path


def list_instances(root: Path, task: str, split: str = "train") -> list[Instance]:
    base = Path(root) / task / split
    if not base.exists():
        raise FileNotFoundError(f"no dataset under {base}")
    out = []
    for shard in sorted(base.glob("shard_*")):
        with open(shard / "manifest.jsonl") as fh:
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                out.append(Instance(row["instance_id"],
                                    shard / row["cond_path"],
                                    shard / row["sol_path"]))
    return out


def load_image(path: Path, resolution: int) -> torch.Tensor:
    """Grayscale PNG -> (1, H, W) tensor normalized to [-1, 1]."""
    img = Image.open(path).convert("L")
    if img.size != (resolution, resolution):
        img = img.resize((resolution, resolution), Image.NEAREST)
    arr = np.asarray(img, dtype=np.float32) / 127.5 - 1.0
    return torch.from_numpy(arr)[None]


class PairDataset(torch.utils.data.Dataset):
    """(condition, solution) image pairs for conditional denoising."""

    def __init__(self, root: Path, task: str, split: str = "train",
                 resolution: int = 64, limit: int | None = None):
        self.instances = list_instances(root, task, split)
        if limit is not None:
            self.instances = self.instances[:limit]
        self.resolution = resolution

    def __len__(self):
        return len(self.instances)

    def __getitem__(self, i):
        inst = self.instances[i]
        return (load_image(inst.cond_path, self.resolution),
                load_image(inst.sol_path, self.resolution))
