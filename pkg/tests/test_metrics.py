"""Unit tests for metrics and report aggregation."""
import math

import numpy as np
import pytest

from geopix.geometry import point_to_polyline_distance
from geopix.metrics import (
    EvalRecord,
    aggregate_report,
    alignment_score,
    best_of_k,
    squareness,
    write_report,
)
from geopix.raster import blank


def _rot(th):
    return np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])


class TestAlignmentScore:
    def test_corners_on_curve(self):
        curve = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
        assert alignment_score(curve, curve) == 0.0

    def test_all_corners_distance_one(self):
        curve = np.array([[-50.0, 0.0], [50.0, 0.0], [50.0, -100.0],
                          [-50.0, -100.0]])  # top side is the near segment
        quad = np.array([[-2.0, 1.0], [2.0, 1.0], [2.0, 1.0], [-2.0, 1.0]])
        assert alignment_score(quad, curve) == pytest.approx(-1.0)

    def test_matches_per_corner_average(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            curve = rng.uniform(0, 128, size=(30, 2))
            quad = rng.uniform(0, 128, size=(4, 2))
            expect = -np.mean([point_to_polyline_distance(p, curve) for p in quad])
            assert alignment_score(quad, curve) == pytest.approx(expect, abs=1e-12)

    def test_rigid_invariance(self):
        rng = np.random.default_rng(9)
        curve = rng.uniform(0, 100, size=(40, 2))
        quad = rng.uniform(0, 100, size=(4, 2))
        base = alignment_score(quad, curve)
        rot = _rot(0.31)
        t = np.array([5.0, -3.0])
        moved = alignment_score(quad @ rot.T + t, curve @ rot.T + t)
        assert moved == pytest.approx(base, abs=1e-9)


class TestSquareness:
    def test_perfect_square_mask(self):
        img = blank(128, 0)
        img[30:70, 30:70] = 255
        assert squareness(img) == 1.0

    def test_two_to_one_rectangle(self):
        img = blank(128, 0)
        img[30:60, 20:80] = 255  # 30 x 60 block
        assert squareness(img) == pytest.approx(math.exp(-2.0), abs=1e-6)

    def test_quad_input(self):
        sq = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
        assert squareness(sq) == pytest.approx(1.0)

    def test_scale_and_rotation_invariance(self):
        sq = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
        moved = (sq @ _rot(0.7).T) * 3.5 + [100.0, -20.0]
        assert squareness(moved) == pytest.approx(squareness(sq), abs=1e-9)


def _rec(iid, valid, value=None, ratio=None, opt=False, n=8):
    return EvalRecord(instance_id=iid, seed=0, valid=valid, primary_value=value,
                      ratio_vs_optimal=ratio, optimal_match=opt, n_points=n)


class TestBestOfK:
    def test_min_length_picks_shortest_valid(self):
        recs = [_rec("a", True, 5.0), _rec("a", True, 4.0), _rec("a", False, 1.0)]
        assert best_of_k(recs, "min_length").primary_value == 4.0

    def test_all_invalid_marker(self):
        recs = [_rec("a", False, 1.0), _rec("a", False, 2.0)]
        out = best_of_k(recs, "min_length")
        assert not out.valid

    def test_max_area(self):
        recs = [_rec("a", True, 0.8), _rec("a", True, 0.9)]
        assert best_of_k(recs, "max_area").primary_value == 0.9

    def test_empty_error(self):
        with pytest.raises(ValueError):
            best_of_k([], "min_length")


class TestAggregateReport:
    def test_mean_and_population_std(self):
        recs = [_rec("a", True, ratio=1.0), _rec("b", True, ratio=1.1)]
        rows = aggregate_report(recs, [(0, 99)])
        assert rows[0].ratio_mean == pytest.approx(1.05)
        assert rows[0].ratio_std == pytest.approx(0.05)

    def test_valid_rate(self):
        recs = [_rec("a", True, ratio=1.0), _rec("b", True, ratio=1.0),
                _rec("c", False), _rec("d", False)]
        rows = aggregate_report(recs, [(0, 99)])
        assert rows[0].valid_rate == pytest.approx(0.5)

    def test_optimal_rate_and_buckets(self):
        recs = [_rec("a", True, ratio=1.0, opt=True, n=5),
                _rec("b", True, ratio=1.2, opt=False, n=5),
                _rec("c", True, ratio=1.0, opt=True, n=9)]
        rows = aggregate_report(recs, [(3, 7), (8, 12)])
        assert len(rows) == 2
        assert rows[0].optimal_rate == pytest.approx(0.5)
        assert rows[1].optimal_rate == pytest.approx(1.0)

    def test_empty_bucket_omitted(self):
        recs = [_rec("a", True, ratio=1.0, n=5)]
        rows = aggregate_report(recs, [(3, 7), (8, 12)])
        assert len(rows) == 1

    def test_write_report(self, tmp_path):
        recs = [_rec("a", True, ratio=1.0), _rec("b", True, ratio=1.1)]
        rows = aggregate_report(recs, [(0, 99)])
        csv_p, json_p = tmp_path / "r.csv", tmp_path / "r.json"
        write_report(rows, csv_p, json_p)
        assert csv_p.exists() and json_p.exists()
        import json
        data = json.loads(json_p.read_text())
        assert len(data) == 1
