"""Evaluation metrics and report aggregation.

alignment_score is the negative mean corner-to-curve distance (0 is
perfect); squareness multiplies the fill ratio of the minimum-area
enclosing rectangle by an exponential aspect-ratio penalty, giving a
scale-free score in [0, 1].
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import ndimage

from .extract import largest_component_mask, min_area_rect, _pixel_corner_points
from .geometry import GeometryError, points_to_segments_distance, polyline_segments, shoelace_area


@dataclass
class EvalRecord:
    instance_id: str
    seed: int
    valid: bool
    primary_value: float | None = None     # length, area, or alignment
    ratio_vs_optimal: float | None = None
    squareness: float | None = None
    optimal_match: bool = False
    n_points: int | None = None


def alignment_score(quad: np.ndarray, curve: np.ndarray) -> float:
    """Negative average corner-to-curve distance; always <= 0."""
    starts, ends = polyline_segments(np.asarray(curve, float), closed=True)
    d = points_to_segments_distance(np.asarray(quad, float), starts, ends)
    return -float(d.mean())


def _squareness_from_rect(area: float, w: float, h: float) -> float:
    if w <= 0 or h <= 0:
        raise GeometryError("degenerate shape: zero-size enclosing rectangle")
    fill = area / (w * h)
    aspect = max(w, h) / min(w, h)
    return fill * math.exp(-2.0 * abs(aspect - 1.0))


def squareness(shape) -> float:
    """Squareness of a quad (4x2 vertex array) or of a filled uint8 mask."""
    arr = np.asarray(shape)
    if arr.ndim == 2 and arr.shape == (4, 2):
        area = shoelace_area(arr)
        _, w, h = min_area_rect(arr)
        return _squareness_from_rect(area, w, h)
    if arr.ndim == 2:
        binary = arr >= 128
        comp = largest_component_mask(binary)
        filled = ndimage.binary_fill_holes(comp)
        area = float(filled.sum())
        _, w, h = min_area_rect(_pixel_corner_points(filled))
        return _squareness_from_rect(area, w, h)
    raise GeometryError("expected a (4,2) quad or a 2-D mask")


def best_of_k(records: list[EvalRecord], objective: str) -> EvalRecord:
    """Best valid record by the stated objective, or an invalid marker."""
    if not records:
        raise ValueError("empty record list")
    if objective not in ("min_length", "max_area"):
        raise ValueError(f"unknown objective {objective!r}")
    valid = [r for r in records if r.valid and r.primary_value is not None]
    if not valid:
        r0 = records[0]
        return EvalRecord(r0.instance_id, r0.seed, valid=False, n_points=r0.n_points)
    key = (lambda r: r.primary_value) if objective == "min_length" \
        else (lambda r: -r.primary_value)
    return min(valid, key=key)


@dataclass
class ReportRow:
    bucket: str
    count: int
    valid_rate: float
    ratio_mean: float | None
    ratio_std: float | None
    optimal_rate: float | None


def aggregate_report(records: list[EvalRecord],
                     buckets: list[tuple[int, int]] | None = None) -> list[ReportRow]:
    """Per-bucket validity rate, ratio mean/std (population), optimal rate.

    Buckets are inclusive (lo, hi) ranges over the record's point count;
    None groups everything into one row.
    """
    if buckets is None:
        groups = {"all": records}
    else:
        groups = {}
        for lo, hi in buckets:
            sel = [r for r in records
                   if r.n_points is not None and lo <= r.n_points <= hi]
            if sel:
                groups[f"{lo}-{hi}"] = sel
    rows = []
    for name, recs in groups.items():
        valid = [r for r in recs if r.valid]
        ratios = [r.ratio_vs_optimal for r in valid if r.ratio_vs_optimal is not None]
        rows.append(ReportRow(
            bucket=name,
            count=len(recs),
            valid_rate=len(valid) / len(recs),
            ratio_mean=float(np.mean(ratios)) if ratios else None,
            ratio_std=float(np.std(ratios)) if ratios else None,
            optimal_rate=(sum(r.optimal_match for r in valid) / len(recs))
            if valid else None,
        ))
    return rows


def write_report(rows: list[ReportRow], csv_path, json_path) -> None:
    fields = ["bucket", "count", "valid_rate", "ratio_mean", "ratio_std", "optimal_rate"]
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(asdict(row))
    with open(json_path, "w") as fh:
        json.dump([asdict(r) for r in rows], fh, indent=2)
        fh.write("\n")
