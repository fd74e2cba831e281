"""Figure rendering: side-by-side comparisons and ratio histograms."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .raster import GRAY


def _foreground(img: np.ndarray) -> np.ndarray:
    return img != GRAY


def difference_map(optimal: np.ndarray, produced: np.ndarray) -> np.ndarray:
    """RGB difference image: optimal-only pixels red, produced-only blue."""
    h, w = optimal.shape
    out = np.full((h, w, 3), 255, dtype=np.uint8)
    a = _foreground(optimal)
    b = _foreground(produced)
    out[a & ~b] = (220, 40, 40)
    out[b & ~a] = (40, 60, 220)
    out[a & b] = (60, 60, 60)
    return out


def render_comparison(optimal: np.ndarray, produced: np.ndarray,
                      out_path: Path, title: str = "") -> None:
    """Optimal | produced | difference panel, written as a PNG."""
    fig, axes = plt.subplots(1, 3, figsize=(9, 3.2))
    for ax, img, name in zip(
            axes,
            (optimal, produced, difference_map(optimal, produced)),
            ("optimal", "produced", "difference")):
        if img.ndim == 2:
            ax.imshow(img, cmap="gray", vmin=0, vmax=255)
        else:
            ax.imshow(img)
        ax.set_title(name, fontsize=10)
        ax.set_axis_off()
    if title:
        fig.suptitle(title, fontsize=11)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)


def render_ratio_histogram(ratios, out_path: Path, task: str) -> None:
    """Histogram of per-instance ratios against the optimal solution."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.hist(ratios, bins=30, color="#4878cf", edgecolor="white")
    ax.set_xlabel("ratio vs optimal")
    ax.set_ylabel("instances")
    ax.set_title(f"{task}: ratio distribution (n={len(ratios)})", fontsize=10)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
