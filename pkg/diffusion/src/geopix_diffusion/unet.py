"""U-Net noise predictor: 4 levels (64-128-256-512), residual blocks with
two 3x3 convs + BatchNorm + ReLU, multi-head self-attention (8 heads,
GroupNorm 32) at the bottleneck and at levels 2 and 3, sinusoidal time
embeddings (128-dim) injected through learned linear projections."""
import math
from dataclasses import dataclass, field

import torch
from torch import nn


@dataclass
class UNetConfig:
    levels: int = 4
    base_channels: int = 64
    channel_progression: tuple[int, ...] = (64, 128, 256, 512)
    in_channels: int = 2      # noisy target + condition
    out_channels: int = 1
    attention_levels: tuple[int, ...] = (2, 3)  # 1-based; bottleneck always
    attention_heads: int = 8
    norm_groups: int = 32
    time_embed_dim: int = 128

    def __post_init__(self):
        if len(self.channel_progression) != self.levels:
            raise ValueError("channel progression must list one width per level")
        if self.channel_progression[0] != self.base_channels:
            raise ValueError("progression must start at base_channels")


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10_000.0) *
                      torch.arange(half, dtype=torch.float32, device=t.device)
                      / half)
    args = t.float()[:, None] * freqs[None, :]
    return torch.cat([torch.sin(args), torch.cos(args)], dim=1)


class ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, t_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, padding=1)
        self.norm1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1)
        self.norm2 = nn.BatchNorm2d(c_out)
        self.act = nn.ReLU()
        self.time_proj = nn.Linear(t_dim, c_out)
        self.skip = (nn.Conv2d(c_in, c_out, 1) if c_in != c_out
                     else nn.Identity())

    def forward(self, x, temb):
        h = self.act(self.norm1(self.conv1(x)))
        h = h + self.time_proj(temb)[:, :, None, None]
        h = self.act(self.norm2(self.conv2(h)))
        return h + self.skip(x)


class SelfAttention(nn.Module):
    def __init__(self, channels: int, heads: int, groups: int):
        super().__init__()
        self.norm = nn.GroupNorm(groups, channels)
        self.attn = nn.MultiheadAttention(channels, heads, batch_first=True)

    def forward(self, x):
        b, c, h, w = x.shape
        flat = self.norm(x).reshape(b, c, h * w).transpose(1, 2)
        out, _ = self.attn(flat, flat, flat, need_weights=False)
        return x + out.transpose(1, 2).reshape(b, c, h, w)


class UNet(nn.Module):
    def __init__(self, cfg: UNetConfig):
        super().__init__()
        self.cfg = cfg
        t_dim = cfg.time_embed_dim
        self.time_mlp = nn.Sequential(nn.Linear(t_dim, t_dim), nn.ReLU(),
                                      nn.Linear(t_dim, t_dim))
        chs = cfg.channel_progression
        self.stem = nn.Conv2d(cfg.in_channels, chs[0], 3, padding=1)

        self.down_blocks = nn.ModuleList()
        self.down_attn = nn.ModuleList()
        self.downsample = nn.ModuleList()
        for lvl in range(cfg.levels):
            c_in = chs[max(lvl - 1, 0)]
            self.down_blocks.append(ResBlock(c_in, chs[lvl], t_dim))
            self.down_attn.append(
                SelfAttention(chs[lvl], cfg.attention_heads, cfg.norm_groups)
                if (lvl + 1) in cfg.attention_levels else nn.Identity())
            self.downsample.append(
                nn.Conv2d(chs[lvl], chs[lvl], 3, stride=2, padding=1)
                if lvl < cfg.levels - 1 else nn.Identity())

        self.mid_block1 = ResBlock(chs[-1], chs[-1], t_dim)
        self.mid_attn = SelfAttention(chs[-1], cfg.attention_heads,
                                      cfg.norm_groups)
        self.mid_block2 = ResBlock(chs[-1], chs[-1], t_dim)

        self.up_blocks = nn.ModuleList()
        self.up_attn = nn.ModuleList()
        self.upsample = nn.ModuleList()
        for lvl in reversed(range(cfg.levels)):
            c_out = chs[max(lvl - 1, 0)]
            self.up_blocks.append(ResBlock(chs[lvl] * 2, c_out, t_dim))
            self.up_attn.append(
                SelfAttention(c_out, cfg.attention_heads, cfg.norm_groups)
                if (lvl + 1) in cfg.attention_levels else nn.Identity())
            self.upsample.append(
                nn.ConvTranspose2d(chs[lvl], chs[lvl], 2, stride=2)
                if lvl < cfg.levels - 1 else nn.Identity())

        self.head = nn.Sequential(nn.Conv2d(chs[0], chs[0], 3, padding=1),
                                  nn.ReLU(),
                                  nn.Conv2d(chs[0], cfg.out_channels, 1))

    def forward(self, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        temb = self.time_mlp(sinusoidal_embedding(t, self.cfg.time_embed_dim))
        h = self.stem(x)
        skips = []
        for block, attn, down in zip(self.down_blocks, self.down_attn,
                                     self.downsample):
            h = attn(block(h, temb))
            skips.append(h)
            h = down(h)
        h = self.mid_block2(self.mid_attn(self.mid_block1(h, temb)), temb)
        for i, (block, attn) in enumerate(zip(self.up_blocks, self.up_attn)):
            lvl = self.cfg.levels - 1 - i
            if lvl < self.cfg.levels - 1:
                h = self.upsample[i](h)
            h = attn(block(torch.cat([h, skips[lvl]], dim=1), temb))
        return self.head(h)


def build_unet(cfg: UNetConfig, seed: int = 0) -> UNet:
    """Deterministic construction: same config and seed, same parameters."""
    torch.manual_seed(seed)
    return UNet(cfg)
