"""Sharded dataset persistence: PNG pairs plus a JSON-lines geometry manifest.

Layout: {root}/{task}/{split}/shard_{k:05}/manifest.jsonl + PNGs +
SHA256SUMS. World coordinates are stored at full precision so every
oracle quantity can be recomputed, and re-rasterizing the stored geometry
must reproduce the PNGs byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from PIL import Image

SHARD_SIZE = 10_000

VALID_TASKS = ("square", "steiner", "maxap")


class DatasetError(RuntimeError):
    pass


@dataclass
class InstanceManifest:
    task: str
    instance_id: str
    seed: int
    resolution: int
    world_to_pixel: tuple[float, ...]
    cond_path: str
    sol_path: str
    points: list[list[float]] = field(default_factory=list)
    geometry: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "InstanceManifest":
        d = json.loads(line)
        d["world_to_pixel"] = tuple(d["world_to_pixel"])
        return cls(**d)


def save_png(img: np.ndarray, path: Path) -> None:
    Image.fromarray(img, mode="L").save(path, format="PNG")


def load_png(path: Path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("L"), dtype=np.uint8)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_shard(instances: list[tuple[InstanceManifest, np.ndarray, np.ndarray]],
                shard_dir: Path) -> dict:
    """Write PNGs, manifest.jsonl and SHA256SUMS; verify checksums after write.

    Instances are (manifest, condition image, solution image) triples,
    written in instance_id order for determinism.
    """
    shard_dir = Path(shard_dir)
    shard_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(instances, key=lambda t: t[0].instance_id)
    names = []
    for man, cond, sol in ordered:
        save_png(cond, shard_dir / man.cond_path)
        save_png(sol, shard_dir / man.sol_path)
        names.extend([man.cond_path, man.sol_path])
    with open(shard_dir / "manifest.jsonl", "w") as fh:
        for man, _, _ in ordered:
            fh.write(man.to_json() + "\n")
    names.append("manifest.jsonl")

    sums = {name: _sha256(shard_dir / name) for name in sorted(names)}
    with open(shard_dir / "SHA256SUMS", "w") as fh:
        for name, digest in sums.items():
            fh.write(f"{digest}  {name}\n")
    for name, digest in sums.items():
        if _sha256(shard_dir / name) != digest:
            raise DatasetError(f"checksum mismatch after write: {name}")
    return {"count": len(ordered),
            "checksum": hashlib.sha256(
                "".join(f"{n}:{d}" for n, d in sums.items()).encode()).hexdigest()}


def read_shard(shard_dir: Path, verify: bool = True) -> list[InstanceManifest]:
    """Parse and validate one shard; instances come back in stored order."""
    shard_dir = Path(shard_dir)
    manifest_path = shard_dir / "manifest.jsonl"
    if not manifest_path.exists():
        raise DatasetError(f"missing manifest: {manifest_path}")

    sums = {}
    sums_path = shard_dir / "SHA256SUMS"
    if verify and sums_path.exists():
        for lineno, line in enumerate(sums_path.read_text().splitlines(), 1):
            digest, name = line.split(None, 1)
            sums[name.strip()] = digest

    instances = []
    with open(manifest_path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                man = InstanceManifest.from_json(line)
            except (json.JSONDecodeError, TypeError, KeyError) as exc:
                raise DatasetError(f"corrupt manifest line {lineno}: {exc}") from exc
            for rel in (man.cond_path, man.sol_path):
                p = shard_dir / rel
                if not p.exists():
                    raise DatasetError(
                        f"instance {man.instance_id}: missing file {rel}")
                if verify and rel in sums and _sha256(p) != sums[rel]:
                    raise DatasetError(
                        f"instance {man.instance_id}: checksum mismatch for {rel}")
            instances.append(man)
    return instances


def shard_dirs(root: Path, task: str, split: str) -> list[Path]:
    base = Path(root) / task / split
    if not base.exists():
        return []
    return sorted(p for p in base.iterdir() if p.is_dir() and p.name.startswith("shard_"))
