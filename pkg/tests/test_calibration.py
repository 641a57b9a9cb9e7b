"""Tests for the affine calibration solve, projection, and subset ranking."""

import itertools
import math

import numpy as np
import pytest

from trajfuse.calibration import (
    CalibrationPair,
    CameraCalibration,
    CameraPoint,
    UnifiedPoint,
    distance,
    project,
    quality_distance,
    select_calibration_set,
    solve_calibration,
    triangle_area,
)
from trajfuse.errors import (
    DegenerateCalibration,
    InsufficientCandidates,
    InvalidInput,
    NoValidSubset,
)
from trajfuse.simulator import CameraModel, generate_grid


def make_pairs(cam_pts, uni_pts):
    return [
        CalibrationPair(CameraPoint(*c), UnifiedPoint(*u))
        for c, u in zip(cam_pts, uni_pts)
    ]


UNIT_TRIANGLE = [(0, 0), (1, 0), (0, 1)]


class TestSolveCalibration:
    def test_identity_map(self):
        cal = solve_calibration(make_pairs(UNIT_TRIANGLE, UNIT_TRIANGLE), "K1")
        assert cal.alpha == (1.0, 0.0, 0.0)
        assert cal.beta == (0.0, 1.0, 0.0)

    def test_pure_translation(self):
        cal = solve_calibration(
            make_pairs(UNIT_TRIANGLE, [(10, 20), (11, 20), (10, 21)]), "K1"
        )
        assert cal.alpha == (1.0, 0.0, 10.0)
        assert cal.beta == (0.0, 1.0, 20.0)

    def test_quarter_turn(self):
        cal = solve_calibration(
            make_pairs(UNIT_TRIANGLE, [(0, 0), (0, 1), (-1, 0)]), "K1"
        )
        assert cal.alpha == pytest.approx((0.0, -1.0, 0.0), abs=1e-12)
        assert cal.beta == pytest.approx((1.0, 0.0, 0.0), abs=1e-12)

    def test_collinear_camera_points_rejected(self):
        with pytest.raises(DegenerateCalibration):
            solve_calibration(
                make_pairs([(0, 0), (1, 1), (2, 2)], [(0, 0), (5, 1), (2, 9)]), "K1"
            )

    def test_duplicate_camera_points_rejected(self):
        with pytest.raises(DegenerateCalibration):
            solve_calibration(
                make_pairs([(1, 1), (1, 1), (0, 2)], UNIT_TRIANGLE), "K1"
            )

    def test_wrong_pair_count(self):
        pairs = make_pairs(UNIT_TRIANGLE, UNIT_TRIANGLE)
        with pytest.raises(InvalidInput):
            solve_calibration(pairs[:2], "K1")

    def test_non_finite_coordinates(self):
        pairs = make_pairs([(0, 0), (1, 0), (0, math.nan)], UNIT_TRIANGLE)
        with pytest.raises(InvalidInput):
            solve_calibration(pairs, "K1")

    def test_bad_d_max(self):
        pairs = make_pairs(UNIT_TRIANGLE, UNIT_TRIANGLE)
        with pytest.raises(InvalidInput):
            solve_calibration(pairs, "K1", d_max=0.0)
        with pytest.raises(InvalidInput):
            solve_calibration(pairs, "K1", d_max=-1.0)

    def test_barycenter_and_d_max_populated(self):
        cal = solve_calibration(
            make_pairs([(0, 0), (2, 0), (0, 2)], [(0, 0), (2, 0), (0, 2)]),
            "K1",
            d_max=3.5,
        )
        assert cal.barycenter_unified == UnifiedPoint(2 / 3, 2 / 3)
        assert cal.d_max == 3.5

    def test_roundtrip_recovers_random_affine_maps(self):
        # solve from 3 points of a known affine map, then check agreement
        # on held-out points
        rng = np.random.default_rng(17)
        for _ in range(100):
            lin = rng.uniform(-2, 2, (2, 2))
            while abs(np.linalg.det(lin)) < 0.1:
                lin = rng.uniform(-2, 2, (2, 2))
            off = rng.uniform(-20, 20, 2)
            pts = rng.uniform(-5, 5, (3, 2))
            while triangle_area(pts[0], pts[1], pts[2]) < 0.05:
                pts = rng.uniform(-5, 5, (3, 2))
            pairs = [
                CalibrationPair(CameraPoint(*p), UnifiedPoint(*(lin @ p + off)))
                for p in pts
            ]
            cal = solve_calibration(pairs, "X")
            for q in rng.uniform(-5, 5, (100, 2)):
                expected = lin @ q + off
                got = project(cal, CameraPoint(*q))
                assert math.hypot(got.x - expected[0], got.y - expected[1]) <= 1e-9

    def test_exact_at_calibration_points(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            cam_pts = rng.uniform(-4, 4, (3, 2))
            if triangle_area(cam_pts[0], cam_pts[1], cam_pts[2]) < 0.05:
                continue
            uni_pts = rng.uniform(-10, 10, (3, 2))
            cal = solve_calibration(make_pairs(cam_pts, uni_pts), "X")
            for pair in cal.calibration_points:
                assert distance(project(cal, pair.cam), pair.unified) <= 1e-9


class TestProject:
    def test_direct_formula(self):
        cal = solve_calibration(
            make_pairs(UNIT_TRIANGLE, [(10, 20), (11, 20), (10, 21)]), "K1"
        )
        assert project(cal, CameraPoint(3, 4)) == UnifiedPoint(13.0, 24.0)

    def test_quarter_turn_formula(self):
        cal = solve_calibration(
            make_pairs(UNIT_TRIANGLE, [(0, 0), (0, 1), (-1, 0)]), "K1"
        )
        got = project(cal, CameraPoint(2, 5))
        assert got.x == pytest.approx(-5.0, abs=1e-12)
        assert got.y == pytest.approx(2.0, abs=1e-12)

    def test_non_finite_point(self):
        cal = solve_calibration(make_pairs(UNIT_TRIANGLE, UNIT_TRIANGLE), "K1")
        with pytest.raises(InvalidInput):
            project(cal, CameraPoint(math.inf, 0.0))


class TestTriangleArea:
    def test_right_triangle(self):
        assert triangle_area((0, 0), (2, 0), (0, 2)) == 2.0

    def test_collinear(self):
        assert triangle_area((0, 0), (1, 1), (2, 2)) == 0.0

    def test_base_height(self):
        assert triangle_area((0, 0), (3, 0), (0, 1)) == 1.5

    def test_permutation_and_translation_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            pts = rng.uniform(-5, 5, (3, 2))
            ref = triangle_area(*pts)
            for perm in itertools.permutations(pts):
                assert triangle_area(*perm) == pytest.approx(ref, rel=1e-12)
            shift = rng.uniform(-100, 100, 2)
            assert triangle_area(*(p + shift for p in pts)) == pytest.approx(
                ref, rel=1e-9
            )

    def test_non_finite(self):
        with pytest.raises(InvalidInput):
            triangle_area((0, 0), (1, math.nan), (0, 1))


@pytest.fixture
def wide_cal():
    pts = [(0, 0), (2, 0), (0, 2)]
    return solve_calibration(make_pairs(pts, pts), "K1")


class TestQualityDistance:
    def test_on_calibration_point(self, wide_cal):
        assert quality_distance(wide_cal, UnifiedPoint(0, 0)) == 0.0

    def test_on_barycenter(self, wide_cal):
        assert quality_distance(wide_cal, UnifiedPoint(2 / 3, 2 / 3)) == 0.0

    def test_barycenter_beats_vertices(self, wide_cal):
        # oracle: evaluate all four distances by hand
        p = (1.0, 1.0)
        d_vertices = [math.dist(p, v) for v in [(0, 0), (2, 0), (0, 2)]]
        d_bary = math.dist(p, (2 / 3, 2 / 3))
        expected = min(d_vertices + [d_bary])
        assert expected == pytest.approx(0.4714045207910317)
        assert quality_distance(wide_cal, UnifiedPoint(*p)) == pytest.approx(expected)

    def test_barycenter_only_mode(self, wide_cal):
        # with the alternative reading the vertices stop counting
        assert quality_distance(
            wide_cal, UnifiedPoint(0, 0), barycenter_only=True
        ) == pytest.approx(math.dist((0, 0), (2 / 3, 2 / 3)))

    def test_zero_only_on_anchors(self, wide_cal):
        rng = np.random.default_rng(5)
        anchors = [(0, 0), (2, 0), (0, 2), (2 / 3, 2 / 3)]
        for _ in range(200):
            p = rng.uniform(-3, 3, 2)
            qd = quality_distance(wide_cal, UnifiedPoint(*p))
            on_anchor = any(math.dist(p, a) == 0.0 for a in anchors)
            assert (qd == 0.0) == on_anchor

    def test_lipschitz(self, wide_cal):
        rng = np.random.default_rng(6)
        for _ in range(200):
            p, q = rng.uniform(-5, 5, (2, 2))
            dp = quality_distance(wide_cal, UnifiedPoint(*p))
            dq = quality_distance(wide_cal, UnifiedPoint(*q))
            assert abs(dp - dq) <= math.dist(p, q) + 1e-12

    def test_non_finite(self, wide_cal):
        with pytest.raises(InvalidInput):
            quality_distance(wide_cal, UnifiedPoint(math.nan, 0.0))


def brute_force_best_area(candidates):
    # independent enumeration with its own area formula (shoelace)
    best = (-1.0, None)
    for combo in itertools.combinations(range(len(candidates)), 3):
        (x1, y1), (x2, y2), (x3, y3) = (
            (candidates[i].cam.x_cam, candidates[i].cam.z_cam) for i in combo
        )
        area = 0.5 * abs(x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2))
        if area > best[0]:
            best = (area, combo)
    return best


class TestSelectCalibrationSet:
    def test_dominant_triangle(self):
        cams = [(0, 0), (4, 0), (0, 4), (1, 1)]
        candidates = make_pairs(cams, cams)
        ranked = select_calibration_set(candidates)
        assert ranked[0].indices == (0, 1, 2)
        assert ranked[0].area == 8.0
        assert [r.area for r in ranked] == sorted(
            (r.area for r in ranked), reverse=True
        )

    def test_all_collinear(self):
        cams = [(0, 0), (1, 1), (2, 2)]
        with pytest.raises(NoValidSubset):
            select_calibration_set(make_pairs(cams, cams))

    def test_too_few(self):
        cams = [(0, 0), (1, 1)]
        with pytest.raises(InsufficientCandidates):
            select_calibration_set(make_pairs(cams, cams))

    def test_matches_exhaustive_enumeration_on_reference_grid(self):
        cam = CameraModel("K1", UnifiedPoint(0, 0), 0.0)
        grid = generate_grid(cam, 47)
        best_area, best_combo = brute_force_best_area(grid)
        ranked = select_calibration_set(grid, top=5)
        assert ranked[0].area == pytest.approx(best_area, rel=1e-12)
        # the winner must dominate every other subset
        assert all(ranked[0].area >= r.area for r in ranked)

    def test_scaling_leaves_ranking_unchanged(self):
        rng = np.random.default_rng(8)
        cams = rng.uniform(-3, 3, (8, 2))
        candidates = make_pairs(cams, cams)
        base = select_calibration_set(candidates)
        for s in (0.5, 2.0, 7.3):
            scaled = make_pairs(cams * s, cams)
            ranked = select_calibration_set(scaled)
            assert [r.indices for r in ranked] == [r.indices for r in base]
            for rs, rb in zip(ranked, base):
                assert rs.area == pytest.approx(s * s * rb.area, rel=1e-9)

    def test_top_limits_results(self):
        cams = [(0, 0), (4, 0), (0, 4), (1, 1), (3, 3)]
        candidates = make_pairs(cams, cams)
        assert len(select_calibration_set(candidates, top=2)) == 2


class TestCameraCalibrationInvariants:
    def test_inconsistent_coefficients_rejected(self, wide_cal):
        with pytest.raises(InvalidInput):
            CameraCalibration(
                camera_id="K1",
                alpha=(2.0, 0.0, 0.0),
                beta=wide_cal.beta,
                calibration_points=wide_cal.calibration_points,
                barycenter_unified=wide_cal.barycenter_unified,
                d_max=wide_cal.d_max,
            )

    def test_wrong_barycenter_rejected(self, wide_cal):
        with pytest.raises(InvalidInput):
            CameraCalibration(
                camera_id="K1",
                alpha=wide_cal.alpha,
                beta=wide_cal.beta,
                calibration_points=wide_cal.calibration_points,
                barycenter_unified=UnifiedPoint(0.0, 0.0),
                d_max=wide_cal.d_max,
            )
