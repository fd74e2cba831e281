"""DDIM noise schedule and sampling loop (100 steps, linear beta, eta=0)."""
from dataclasses import dataclass, field

import torch


@dataclass
class DiffusionSchedule:
    """Linear-beta schedule with deterministic (eta=0) DDIM sampling."""

    steps: int = 100
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    eta: float = 0.0
    betas: torch.Tensor = field(init=False)
    alphas: torch.Tensor = field(init=False)
    alpha_bars: torch.Tensor = field(init=False)

    def __post_init__(self):
        self.betas = torch.linspace(self.beta_start, self.beta_end, self.steps,
                                    dtype=torch.float64)
        if not torch.all(self.betas[1:] > self.betas[:-1]):
            raise ValueError("betas must be strictly increasing")
        if self.betas[0] <= 0 or self.betas[-1] >= 1:
            raise ValueError("betas must lie in (0, 1)")
        self.alphas = 1.0 - self.betas
        self.alpha_bars = torch.cumprod(self.alphas, dim=0)

    def add_noise(self, x0: torch.Tensor, eps: torch.Tensor,
                  t: torch.Tensor) -> torch.Tensor:
        """Forward process: x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps."""
        ab = self.alpha_bars.to(x0.dtype)[t].view(-1, 1, 1, 1)
        return ab.sqrt() * x0 + (1.0 - ab).sqrt() * eps

    def x0_from_eps(self, xt: torch.Tensor, eps: torch.Tensor,
                    t: torch.Tensor) -> torch.Tensor:
        ab = self.alpha_bars.to(xt.dtype)[t].view(-1, 1, 1, 1)
        return (xt - (1.0 - ab).sqrt() * eps) / ab.sqrt()

    def ddim_step(self, xt: torch.Tensor, eps: torch.Tensor,
                  t: int, t_prev: int) -> torch.Tensor:
        """One deterministic DDIM update from timestep t to t_prev."""
        ab_t = float(self.alpha_bars[t])
        ab_prev = float(self.alpha_bars[t_prev]) if t_prev >= 0 else 1.0
        x0 = (xt - (1.0 - ab_t) ** 0.5 * eps) / ab_t ** 0.5
        return ab_prev ** 0.5 * x0 + (1.0 - ab_prev) ** 0.5 * eps


@torch.no_grad()
def ddim_sample(model, cond: torch.Tensor, schedule: DiffusionSchedule,
                seed: int, return_trajectory: bool = False):
    """Full reverse chain from pure noise; deterministic given the seed.

    ``model(x, t)`` gets the noisy target concatenated with the condition
    channel and returns predicted noise. Optionally also returns the x0
    estimates at each step (coarse-to-fine trajectory).
    """
    g = torch.Generator(device="cpu").manual_seed(seed)
    xt = torch.randn(cond.shape[0], 1, cond.shape[2], cond.shape[3],
                     generator=g).to(cond.device, cond.dtype)
    traj = []
    ts = list(range(schedule.steps - 1, -1, -1))
    for i, t in enumerate(ts):
        t_prev = ts[i + 1] if i + 1 < len(ts) else -1
        tt = torch.full((cond.shape[0],), t, dtype=torch.long,
                        device=cond.device)
        eps = model(torch.cat([xt, cond], dim=1), tt)
        if return_trajectory:
            traj.append(schedule.x0_from_eps(xt, eps, tt))
        xt = schedule.ddim_step(xt, eps, t, t_prev)
    return (xt, traj) if return_trajectory else xt


@torch.no_grad()
def ddim_sample_oracle(x0: torch.Tensor, schedule: DiffusionSchedule,
                       seed: int) -> torch.Tensor:
    """Sampling with the true-noise oracle: eps_theta == the eps used in the
    forward process. Recovers x0 exactly (scheduler correctness check that
    needs no trained weights)."""
    g = torch.Generator(device="cpu").manual_seed(seed)
    eps = torch.randn(x0.shape, generator=g).to(x0.device, x0.dtype)
    t_last = schedule.steps - 1
    xt = schedule.add_noise(x0, eps, torch.full((x0.shape[0],), t_last,
                                                dtype=torch.long))
    ts = list(range(schedule.steps - 1, -1, -1))
    for i, t in enumerate(ts):
        t_prev = ts[i + 1] if i + 1 < len(ts) else -1
        xt = schedule.ddim_step(xt, eps, t, t_prev)
    return xt
