"""Conditional DDIM trainer/sampler and regression ablation.

Consumes sharded (condition, solution) image datasets produced by the
geopix pipeline and emits sample PNGs plus a samples manifest that the
geopix `eval` command accepts.
"""

from .scheduler import DiffusionSchedule
from .unet import UNetConfig, build_unet

__all__ = ["DiffusionSchedule", "UNetConfig", "build_unet"]
