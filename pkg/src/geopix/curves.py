"""Procedural Jordan curves that pass exactly through inscribed squares.

A curve is a radial harmonic profile around the origin plus a periodic
cubic-spline correction that forces the contour through every vertex of
the sampled squares. With small probability the curve is replaced by a
perfect circle (which trivially inscribes squares at any rotation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import (
    GeometryError,
    point_to_polyline_distance,
    points_to_segments_distance,
    polyline_proper_self_intersections,
    polyline_segments,
)

TWO_PI = 2.0 * math.pi


class GenerationError(RuntimeError):
    """Raised when the retry budget for one instance is exhausted."""

    def __init__(self, seed, attempts):
        super().__init__(f"curve generation failed after {attempts} attempts (seed={seed})")
        self.seed = seed


@dataclass
class HarmonicProfile:
    """Random radial profile r(theta) = 1 + sum_h amp_h * sin(h*theta + phase_h)."""

    amplitudes: np.ndarray
    phases: np.ndarray

    @property
    def harmonic_count(self) -> int:
        return len(self.amplitudes)


def sample_radial_profile(profile: HarmonicProfile, theta) -> np.ndarray | float:
    """Evaluate the radial profile; 2*pi periodic by construction."""
    th = np.asarray(theta, dtype=float)
    h = np.arange(1, profile.harmonic_count + 1, dtype=float)
    r = 1.0 + np.sin(np.multiply.outer(th, h) + profile.phases) @ profile.amplitudes
    return r if th.ndim else float(r)


@dataclass
class InscribedSquare:
    center: tuple[float, float]
    side: float
    rotation: float  # radians, [0, 2*pi)

    @property
    def vertices(self) -> np.ndarray:
        """The 4 corners in cyclic order."""
        half_diag = self.side / math.sqrt(2.0)
        angles = self.rotation + math.pi / 4 + np.arange(4) * (math.pi / 2)
        cx, cy = self.center
        return np.column_stack((cx + half_diag * np.cos(angles),
                                cy + half_diag * np.sin(angles)))


@dataclass
class CurveInstance:
    """A closed sampled curve with the squares it was built around."""

    curve: np.ndarray                 # (n_samples, 2), closed implicitly
    squares: list[InscribedSquare]
    scale: float                      # world = scale * (raw - translation)
    translation: tuple[float, float]
    is_circle: bool
    seed: int


@dataclass
class CurveGenConfig:
    n_samples: int = 500
    h_min: int = 6
    h_max: int = 30
    amplitude: float = 0.15
    side_min: float = 0.3
    side_max: float = 0.7
    center_radius: float = 0.5
    squares_min: int = 1
    squares_max: int = 5
    max_translation: float = 0.5
    circle_prob: float = 0.1
    min_knot_sep: float = math.radians(0.5)
    min_radius: float = 0.05
    max_attempts: int = 200


def jordan_check(points: np.ndarray, closed: bool = True) -> bool:
    """True iff no two non-adjacent segments of the closed polyline cross."""
    if not closed:
        raise GeometryError("jordan_check expects a closed polyline")
    return polyline_proper_self_intersections(points) == 0


def _sample_squares(rng: np.random.Generator, cfg: CurveGenConfig) -> list[InscribedSquare]:
    count = int(rng.integers(cfg.squares_min, cfg.squares_max + 1))
    squares = []
    for _ in range(count):
        ang = rng.uniform(0.0, TWO_PI)
        rad = cfg.center_radius * math.sqrt(rng.uniform())
        squares.append(InscribedSquare(
            center=(rad * math.cos(ang), rad * math.sin(ang)),
            side=float(rng.uniform(cfg.side_min, cfg.side_max)),
            rotation=float(rng.uniform(0.0, TWO_PI)),
        ))
    return squares


def _knots_from_squares(squares) -> tuple[np.ndarray, np.ndarray] | None:
    """Polar (theta, r) of all square vertices, sorted by angle; None if degenerate."""
    verts = np.vstack([s.vertices for s in squares])
    r = np.hypot(verts[:, 0], verts[:, 1])
    if np.any(r < 1e-6):
        return None
    theta = np.mod(np.arctan2(verts[:, 1], verts[:, 0]), TWO_PI)
    order = np.argsort(theta)
    return theta[order], r[order]


def _knot_separation_ok(theta: np.ndarray, min_sep: float) -> bool:
    gaps = np.diff(np.concatenate([theta, [theta[0] + TWO_PI]]))
    return bool(np.all(gaps >= min_sep))


def _sample_angles_with_knots(n_samples: int, knots: np.ndarray) -> np.ndarray:
    """Uniform angle grid with the nearest sample snapped onto each knot.

    Including the knot angles among the samples makes the polyline pass
    through the square vertices exactly, not just the underlying smooth
    curve.
    """
    thetas = np.linspace(0.0, TWO_PI, n_samples, endpoint=False)
    step = TWO_PI / n_samples
    taken = set()
    for k in knots:
        i = int(round(k / step)) % n_samples
        while i in taken:   # two knots competing for a slot: shift one over
            i = (i + 1) % n_samples
        thetas[i] = k
        taken.add(i)
    return np.sort(thetas)


def _normalize(curve: np.ndarray, squares: list[InscribedSquare]):
    """Map the joint bounding box into [-1, 1]^2, preserving aspect ratio."""
    all_pts = np.vstack([curve] + [s.vertices for s in squares])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    center = (lo + hi) / 2.0
    half = float(max(hi - lo) / 2.0)
    scale = 1.0 / half
    curve_n = (curve - center) * scale
    squares_n = [InscribedSquare(center=tuple((np.asarray(s.center) - center) * scale),
                                 side=s.side * scale, rotation=s.rotation)
                 for s in squares]
    return curve_n, squares_n, scale, (float(center[0]), float(center[1]))


def _build_circle(rng: np.random.Generator, cfg: CurveGenConfig, seed: int) -> CurveInstance:
    radius = float(rng.uniform(0.5, 1.2))
    count = int(rng.integers(cfg.squares_min, cfg.squares_max + 1))
    squares = [InscribedSquare(center=(0.0, 0.0), side=radius * math.sqrt(2.0),
                               rotation=float(rng.uniform(0.0, TWO_PI)))
               for _ in range(count)]
    knots, _ = _knots_from_squares(squares)
    thetas = _sample_angles_with_knots(cfg.n_samples, knots)
    curve = radius * np.column_stack((np.cos(thetas), np.sin(thetas)))
    t = rng.uniform(-cfg.max_translation, cfg.max_translation, size=2)
    curve = curve + t
    squares = [InscribedSquare((s.center[0] + t[0], s.center[1] + t[1]),
                               s.side, s.rotation) for s in squares]
    curve, squares, scale, trans = _normalize(curve, squares)
    return CurveInstance(curve, squares, scale, trans, is_circle=True, seed=seed)


def generate_instance(seed: int, cfg: CurveGenConfig | None = None) -> CurveInstance:
    """Generate one valid instance, retrying internally until checks pass."""
    cfg = cfg or CurveGenConfig()
    rng = np.random.default_rng(seed)
    if rng.random() < cfg.circle_prob:
        return _build_circle(rng, cfg, seed)

    for _ in range(cfg.max_attempts):
        H = int(rng.integers(cfg.h_min, cfg.h_max + 1))
        h = np.arange(1, H + 1, dtype=float)
        profile = HarmonicProfile(
            amplitudes=cfg.amplitude * rng.uniform(-1.0, 1.0, size=H) / h,
            phases=rng.uniform(0.0, TWO_PI, size=H),
        )
        squares = _sample_squares(rng, cfg)
        knots = _knots_from_squares(squares)
        if knots is None:
            continue
        theta_k, r_k = knots
        if not _knot_separation_ok(theta_k, cfg.min_knot_sep):
            continue

        # Periodic spline through the radius corrections at the knots.
        corr = r_k - sample_radial_profile(profile, theta_k)
        theta_ext = np.concatenate([theta_k, [theta_k[0] + TWO_PI]])
        corr_ext = np.concatenate([corr, [corr[0]]])
        spline = CubicSpline(theta_ext, corr_ext, bc_type="periodic")

        thetas = _sample_angles_with_knots(cfg.n_samples, theta_k)
        radius = sample_radial_profile(profile, thetas) + spline(
            np.mod(thetas - theta_k[0], TWO_PI) + theta_k[0])
        if np.min(radius) < cfg.min_radius:
            continue
        curve = np.column_stack((radius * np.cos(thetas), radius * np.sin(thetas)))

        t = rng.uniform(-cfg.max_translation, cfg.max_translation, size=2)
        curve = curve + t
        squares_t = [InscribedSquare((s.center[0] + t[0], s.center[1] + t[1]),
                                     s.side, s.rotation) for s in squares]
        curve, squares_n, scale, trans = _normalize(curve, squares_t)
        if not jordan_check(curve):
            continue
        starts, ends = polyline_segments(curve, closed=True)
        verts = np.vstack([s.vertices for s in squares_n])
        if points_to_segments_distance(verts, starts, ends).max() >= 1e-6:
            continue
        return CurveInstance(curve, squares_n, scale, trans, is_circle=False, seed=seed)

    raise GenerationError(seed, cfg.max_attempts)
