"""Training loops: conditional denoiser (epsilon-MSE) and a condition-only
regression baseline sharing the same backbone."""
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch.utils.data import DataLoader

from .data import PairDataset
from .scheduler import DiffusionSchedule
from .unet import UNetConfig, build_unet


@dataclass
class TrainConfig:
    data_root: str
    task: str = "maxap"
    split: str = "train"
    resolution: int = 64
    epochs: int = 20
    batch_size: int = 16
    lr: float = 6e-4
    warmup_steps: int = 100
    min_lr_factor: float = 0.1
    grad_accum: int = 8
    grad_clip: float = 1.0
    seed: int = 0
    limit: int | None = None
    out_dir: str = "runs/ddim"
    num_workers: int = 0


def _lr_lambda(step: int, total: int, warmup: int, min_factor: float) -> float:
    """Linear warmup, then a half cosine cycle down to min_factor * lr."""
    if step < warmup:
        return (step + 1) / warmup
    frac = (step - warmup) / max(total - warmup, 1)
    frac = min(frac, 1.0)
    return min_factor + (1.0 - min_factor) * 0.5 * (1.0 + math.cos(math.pi * frac))


def _make_loader(cfg: TrainConfig) -> DataLoader:
    ds = PairDataset(Path(cfg.data_root), cfg.task, cfg.split,
                     resolution=cfg.resolution, limit=cfg.limit)
    gen = torch.Generator().manual_seed(cfg.seed)
    return DataLoader(ds, batch_size=cfg.batch_size, shuffle=True,
                      generator=gen, num_workers=cfg.num_workers,
                      drop_last=True)


def _save_checkpoint(path: Path, model, unet_cfg: UNetConfig,
                     train_cfg: TrainConfig, kind: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({"kind": kind,
                "model_state": model.state_dict(),
                "unet_config": asdict(unet_cfg),
                "train_config": asdict(train_cfg)}, path)


def _write_loss_log(path: Path, epoch_losses: list[float]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump({"epochs": epoch_losses}, fh, indent=2)


def ddim_train(cfg: TrainConfig, schedule: DiffusionSchedule | None = None,
               device: str = "cpu") -> Path:
    """Train the conditional epsilon-predictor.  Returns the run directory
    containing loss_log.json and model checkpoints."""
    schedule = schedule or DiffusionSchedule()
    torch.manual_seed(cfg.seed)
    loader = _make_loader(cfg)
    unet_cfg = UNetConfig()
    model = build_unet(unet_cfg, seed=cfg.seed).to(device)
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr)
    total_steps = max(cfg.epochs * len(loader) // cfg.grad_accum, 1)
    sched_lr = torch.optim.lr_scheduler.LambdaLR(
        opt, lambda s: _lr_lambda(s, total_steps, cfg.warmup_steps,
                                  cfg.min_lr_factor))
    out_dir = Path(cfg.out_dir)
    noise_gen = torch.Generator().manual_seed(cfg.seed + 1)
    epoch_losses = []
    micro = 0
    for epoch in range(cfg.epochs):
        model.train()
        running, count = 0.0, 0
        for cond, sol in loader:
            cond, sol = cond.to(device), sol.to(device)
            b = sol.shape[0]
            t = torch.randint(0, schedule.steps, (b,), generator=noise_gen)
            eps = torch.randn(sol.shape, generator=noise_gen).to(device)
            xt = schedule.add_noise(sol, eps, t.to(device))
            eps_hat = model(torch.cat([xt, cond], dim=1), t.to(device))
            loss = torch.nn.functional.mse_loss(eps_hat, eps)
            (loss / cfg.grad_accum).backward()
            micro += 1
            if micro % cfg.grad_accum == 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
                opt.step()
                opt.zero_grad()
                sched_lr.step()
            running += loss.item() * b
            count += b
        epoch_losses.append(running / max(count, 1))
        _write_loss_log(out_dir / "loss_log.json", epoch_losses)
        _save_checkpoint(out_dir / "model_last.pt", model, unet_cfg, cfg,
                         kind="ddim")
    return out_dir


def regression_train(cfg: TrainConfig, device: str = "cpu") -> Path:
    """Ablation: same backbone predicts the solution image directly from the
    condition (no diffusion).  The noisy-input channel is fed zeros and the
    timestep is fixed at 0."""
    torch.manual_seed(cfg.seed)
    loader = _make_loader(cfg)
    unet_cfg = UNetConfig()
    model = build_unet(unet_cfg, seed=cfg.seed).to(device)
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr)
    total_steps = max(cfg.epochs * len(loader) // cfg.grad_accum, 1)
    sched_lr = torch.optim.lr_scheduler.LambdaLR(
        opt, lambda s: _lr_lambda(s, total_steps, cfg.warmup_steps,
                                  cfg.min_lr_factor))
    out_dir = Path(cfg.out_dir)
    epoch_losses = []
    micro = 0
    for epoch in range(cfg.epochs):
        model.train()
        running, count = 0.0, 0
        for cond, sol in loader:
            cond, sol = cond.to(device), sol.to(device)
            b = sol.shape[0]
            zeros = torch.zeros_like(sol)
            t = torch.zeros(b, dtype=torch.long, device=device)
            pred = model(torch.cat([zeros, cond], dim=1), t)
            loss = torch.nn.functional.mse_loss(pred, sol)
            (loss / cfg.grad_accum).backward()
            micro += 1
            if micro % cfg.grad_accum == 0:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
                opt.step()
                opt.zero_grad()
                sched_lr.step()
            running += loss.item() * b
            count += b
        epoch_losses.append(running / max(count, 1))
        _write_loss_log(out_dir / "loss_log.json", epoch_losses)
        _save_checkpoint(out_dir / "model_last.pt", model, unet_cfg, cfg,
                         kind="regression")
    return out_dir


def load_checkpoint(path: Path, device: str = "cpu"):
    """Rebuild the model recorded in a checkpoint.  Returns (model, payload)."""
    payload = torch.load(path, map_location=device, weights_only=False)
    unet_cfg = UNetConfig(**payload["unet_config"])
    model = build_unet(unet_cfg)
    model.load_state_dict(payload["model_state"])
    model.to(device).eval()
    return model, payload
