"""Tests for correlation scoring, track matching, and merging."""

import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from trajfuse.calibration import CalibrationPair, CameraPoint, UnifiedPoint, solve_calibration
from trajfuse.errors import ConflictingMatch, InvalidInput
from trajfuse.fusion import (
    TIME_QUALITY_ZERO_S,
    MergeConfig,
    Sample,
    Track,
    match_tracks,
    merge_tracks,
    pair_samples,
    quality_measure,
    quality_time,
    sample_correlation,
    trajectory_correlation,
)


def sample(t, x=0.0, y=0.0, quality=1.0, camera="A"):
    return Sample(t=t, pos=UnifiedPoint(x, y), quality=quality, source_camera=camera)


def track(track_id, samples):
    return Track.from_samples(track_id, samples)


def const_track(track_id, times, camera, x=0.0, y=0.0, quality=1.0):
    return track(track_id, [sample(t, x, y, quality, camera) for t in times])


@pytest.fixture
def cfg():
    return MergeConfig()


@pytest.fixture
def wide_cal():
    pts = [
        CalibrationPair(CameraPoint(x, z), UnifiedPoint(x, z))
        for x, z in [(0, 0), (2, 0), (0, 2)]
    ]
    return solve_calibration(pts, "K1")


class TestQualityTime:
    def test_simultaneous(self):
        assert quality_time(0.0) == 1.0

    def test_half_second(self):
        assert quality_time(0.5) == 0.5

    def test_clamped_at_one_second(self):
        assert quality_time(1.0) == 0.0

    def test_zero_crossing_boundary(self):
        assert quality_time(TIME_QUALITY_ZERO_S) == 0.0

    def test_invalid(self):
        with pytest.raises(InvalidInput):
            quality_time(-0.1)
        with pytest.raises(InvalidInput):
            quality_time(math.nan)

    def test_range(self):
        for dt in np.linspace(0, 5, 100):
            assert 0.0 <= quality_time(float(dt)) <= 1.0


class TestQualityMeasure:
    def test_on_calibration_point(self, wide_cal):
        assert quality_measure(wide_cal, UnifiedPoint(0, 0)) == 1.0

    def test_one_meter_out(self, wide_cal):
        # nearest anchor is the vertex at (0, 0), exactly 1 m away
        assert quality_measure(wide_cal, UnifiedPoint(0, -1)) == 0.5

    def test_clamped_far_away(self, wide_cal):
        assert quality_measure(wide_cal, UnifiedPoint(0, -3)) == 0.0

    def test_boundary_at_d_max(self, wide_cal):
        assert quality_measure(wide_cal, UnifiedPoint(0, -2)) == 0.0

    def test_range(self, wide_cal):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p = UnifiedPoint(*rng.uniform(-10, 10, 2))
            assert 0.0 <= quality_measure(wide_cal, p) <= 1.0


class TestSampleCorrelation:
    def test_perfect_coincidence(self):
        p = sample_correlation(sample(0.0, camera="A"), sample(0.0, camera="B"))
        assert p.c_i == 1.0
        assert p.d == 0.0 and p.delta_t == 0.0

    def test_direct_formula(self):
        a = sample(0.0, 0.0, 0.0, 0.5, "A")
        b = sample(0.0, 0.5, 0.0, 0.5, "B")
        p = sample_correlation(a, b)
        assert p.q_factor == 0.25
        assert p.d_factor == 0.75
        assert p.c_i == 0.1875

    def test_distant_points_penalize(self):
        a = sample(0.0, 0.0, 0.0, 1.0, "A")
        b = sample(0.0, 2.0, 0.0, 1.0, "B")
        p = sample_correlation(a, b)
        assert p.d_factor == -3.0
        assert p.c_i == -3.0

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            a = sample(rng.uniform(0, 5), *rng.uniform(-3, 3, 2), rng.uniform(0, 1), "A")
            b = sample(rng.uniform(0, 5), *rng.uniform(-3, 3, 2), rng.uniform(0, 1), "B")
            if abs(a.t - b.t) > 10:
                continue
            assert sample_correlation(a, b).c_i == sample_correlation(b, a).c_i

    def test_same_camera_rejected(self):
        with pytest.raises(InvalidInput):
            sample_correlation(sample(0.0, camera="A"), sample(0.1, camera="A"))

    def test_factor_ranges(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            a = sample(rng.uniform(0, 5), *rng.uniform(-4, 4, 2), rng.uniform(0, 1), "A")
            b = sample(rng.uniform(0, 5), *rng.uniform(-4, 4, 2), rng.uniform(0, 1), "B")
            p = sample_correlation(a, b)
            assert 0.0 <= p.q_factor <= 1.0
            assert p.d_factor <= 1.0


class TestPairSamples:
    def test_unique_nearest_neighbors(self, cfg):
        ta = const_track("a", [0.0, 1.0, 2.0], "A")
        tb = const_track("b", [0.1, 1.1, 2.1], "B")
        pairs = pair_samples(ta, tb, cfg)
        assert len(pairs) == 3
        assert all(p.delta_t == pytest.approx(0.1) for p in pairs)

    def test_gap_beyond_cap(self, cfg):
        ta = const_track("a", [0.0], "A")
        tb = const_track("b", [5.0], "B")
        assert pair_samples(ta, tb, cfg) == []

    def test_tie_broken_by_earlier_time(self, cfg):
        # both possible assignments have the same gap; enumerate them and
        # check the greedy outcome picks the earlier first-track sample
        ta = const_track("a", [0.0, 0.2], "A")
        tb = const_track("b", [0.1], "B")
        assert abs(0.0 - 0.1) == pytest.approx(abs(0.2 - 0.1))
        pairs = pair_samples(ta, tb, cfg)
        assert len(pairs) == 1
        assert pairs[0].a.t == 0.0 and pairs[0].b.t == 0.1

    def test_exact_tie_broken_by_earlier_time(self, cfg):
        # 0.25 gaps on both sides are exactly representable, a true tie
        ta = const_track("a", [0.0, 0.5], "A")
        tb = const_track("b", [0.25], "B")
        pairs = pair_samples(ta, tb, cfg)
        assert len(pairs) == 1
        assert pairs[0].a.t == 0.0

    def test_each_sample_used_once(self, cfg):
        rng = np.random.default_rng(12)
        ta = const_track("a", sorted(rng.uniform(0, 10, 30)), "A")
        tb = const_track("b", sorted(rng.uniform(0, 10, 20)), "B")
        pairs = pair_samples(ta, tb, cfg)
        assert len({id(p.a) for p in pairs}) == len(pairs)
        assert len({id(p.b) for p in pairs}) == len(pairs)
        assert all(p.delta_t <= cfg.max_pair_dt for p in pairs)

    def test_boundary_gap_allowed_but_worthless(self):
        cfg = MergeConfig(max_pair_dt=TIME_QUALITY_ZERO_S)
        ta = const_track("a", [0.0], "A")
        tb = const_track("b", [TIME_QUALITY_ZERO_S], "B")
        pairs = pair_samples(ta, tb, cfg)
        assert len(pairs) == 1
        assert pairs[0].c_i == 0.0


class TestTrajectoryCorrelation:
    def test_identical_synchronized_tracks(self, cfg):
        times = [i * 0.1 for i in range(10)]
        ta = const_track("a", times, "A")
        tb = const_track("b", times, "B")
        report = trajectory_correlation(ta, tb, cfg)
        assert report.c == 10.0
        assert report.n_pairs == 10

    def test_disjoint_tracks(self, cfg):
        ta = const_track("a", [0.0, 0.1], "A")
        tb = const_track("b", [100.0, 100.1], "B")
        report = trajectory_correlation(ta, tb, cfg)
        assert report.c == 0.0 and report.n_pairs == 0

    def test_shared_camera_rejected(self, cfg):
        ta = const_track("a", [0.0], "A")
        tb = const_track("b", [0.0], "A")
        with pytest.raises(InvalidInput):
            trajectory_correlation(ta, tb, cfg)

    def test_symmetric_for_equal_length_tracks(self, cfg):
        rng = np.random.default_rng(21)
        for _ in range(20):
            times_a = sorted(rng.uniform(0, 5, 15))
            times_b = sorted(rng.uniform(0, 5, 15))
            ta = track(
                "a", [sample(t, *rng.uniform(-1, 1, 2), camera="A") for t in times_a]
            )
            tb = track(
                "b", [sample(t, *rng.uniform(-1, 1, 2), camera="B") for t in times_b]
            )
            cab = trajectory_correlation(ta, tb, cfg).c
            cba = trajectory_correlation(tb, ta, cfg).c
            assert cab == pytest.approx(cba, abs=1e-12)

    def test_closer_positions_never_decrease_c(self, cfg):
        # same geometry with every paired distance scaled down
        rng = np.random.default_rng(22)
        times = sorted(rng.uniform(0, 5, 20))
        qualities = rng.uniform(0.1, 1.0, 20)
        for scale in (1.0, 0.7, 0.3, 0.0):
            base = [
                sample(t, 0.0, 0.0, q, "A") for t, q in zip(times, qualities)
            ]
            other = [
                sample(t, 1.5 * scale, 0.0, q, "B") for t, q in zip(times, qualities)
            ]
            c = trajectory_correlation(track("a", base), track("b", other), cfg).c
            if scale == 1.0:
                prev = c
            else:
                assert c >= prev
                prev = c


def window_track(track_id, camera, segments):
    """Samples in far-apart windows; segments are (t0, n, x) triples."""
    samples = []
    for t0, n, x in segments:
        samples.extend(sample(t0 + i * 0.1, x, 0.0, 1.0, camera) for i in range(n))
    return track(track_id, samples)


class TestMatchTracks:
    def test_dominant_diagonal(self, cfg):
        # engineered correlations [[10, -2], [-3, 8]]: time windows keep
        # the four pairings independent, sqrt(2) meters gives C_i = -1
        off = math.sqrt(2.0)
        a1 = window_track("A1", "A", [(0, 10, 0.0), (100, 2, 0.0)])
        a2 = window_track("A2", "A", [(200, 3, 0.0), (300, 8, 0.0)])
        b1 = window_track("B1", "B", [(0, 10, 0.0), (200, 3, off)])
        b2 = window_track("B2", "B", [(100, 2, off), (300, 8, 0.0)])
        result = match_tracks({"A": [a1, a2], "B": [b1, b2]}, cfg)
        by_pair = {d.report.track_pair: d.report.c for d in result.decisions}
        assert by_pair[("A1", "B1")] == pytest.approx(10.0)
        assert by_pair[("A1", "B2")] == pytest.approx(-2.0)
        assert by_pair[("A2", "B1")] == pytest.approx(-3.0)
        assert by_pair[("A2", "B2")] == pytest.approx(8.0)
        assert sorted(result.matches) == [("A1", "B1"), ("A2", "B2")]

    def test_all_below_threshold(self, cfg):
        a1 = const_track("A1", [0.0, 0.1], "A", x=0.0)
        b1 = const_track("B1", [0.0, 0.1], "B", x=3.0)
        result = match_tracks({"A": [a1], "B": [b1]}, cfg)
        assert result.matches == []
        assert all(d.reason == "below_threshold" for d in result.decisions)

    def test_greedy_diverges_from_optimal_assignment(self, cfg):
        # correlations [[10, 9], [8, 1]]: greedy takes the single highest
        # pair and stops; the optimal assignment would take the off-diagonal
        a1 = window_track("A1", "A", [(0, 10, 0.0), (100, 9, 0.0)])
        a2 = window_track("A2", "A", [(200, 8, 0.0), (300, 1, 0.0)])
        b1 = window_track("B1", "B", [(0, 10, 0.0), (200, 8, 0.0)])
        b2 = window_track("B2", "B", [(100, 9, 0.0), (300, 1, 0.0)])
        result = match_tracks({"A": [a1, a2], "B": [b1, b2]}, cfg)
        assert result.matches == [("A1", "B1")]
        reasons = {d.report.track_pair: d.reason for d in result.decisions}
        assert reasons[("A1", "B2")] == "camera_slot_taken"
        assert reasons[("A2", "B1")] == "camera_slot_taken"
        assert reasons[("A2", "B2")] == "below_threshold"

        # optimal-assignment oracle: total correlation 17 beats greedy's 10
        c = np.array([[10.0, 9.0], [8.0, 1.0]])
        rows, cols = linear_sum_assignment(-c)
        optimal_total = c[rows, cols].sum()
        greedy_total = sum(
            d.report.c for d in result.decisions if d.accepted
        )
        assert optimal_total == pytest.approx(17.0)
        assert greedy_total == pytest.approx(10.0)
        assert greedy_total < optimal_total

    def test_never_emits_below_threshold_or_double_slot(self):
        rng = np.random.default_rng(30)
        cfg = MergeConfig(threshold=2.0)
        tracks = {}
        for cam in ("A", "B", "C"):
            tracks[cam] = [
                track(
                    f"{cam}{i}",
                    [
                        sample(t, *rng.uniform(-1, 1, 2), rng.uniform(0.2, 1), cam)
                        for t in sorted(rng.uniform(0, 6, 25))
                    ],
                )
                for i in range(3)
            ]
        result = match_tracks(tracks, cfg)
        camera_of = {t.track_id: cam for cam, ts in tracks.items() for t in ts}
        slots = set()
        for d in result.decisions:
            if not d.accepted:
                continue
            assert d.report.c >= cfg.threshold
            ida, idb = d.report.track_pair
            for key in ((ida, camera_of[idb]), (idb, camera_of[ida])):
                assert key not in slots
                slots.add(key)

    def test_single_camera_yields_no_matches(self, cfg):
        tracks = {"A": [const_track("A1", [0.0, 0.1], "A")]}
        assert match_tracks(tracks, cfg).matches == []


class TestMergeTracks:
    def test_identical_overlap_fuses_to_same_positions(self, cfg):
        times = [i * 0.1 for i in range(60)]
        ta = const_track("A1", times, "A", x=1.0, y=2.0)
        tb = const_track("B1", times, "B", x=1.0, y=2.0)
        result = match_tracks({"A": [ta], "B": [tb]}, cfg)
        fused = merge_tracks(result, cfg)
        assert len(fused) == 1
        assert fused[0].track_id == "A1+B1"
        assert fused[0].contributing_cameras == {"A", "B"}
        for s in fused[0].samples:
            assert s.pos == UnifiedPoint(1.0, 2.0)

    def test_zero_quality_side_is_ignored(self, cfg):
        a = sample(0.0, 1.0, 1.0, 1.0, "A")
        b = sample(0.0, 9.0, 9.0, 0.0, "B")
        ta = track("A1", [a] + [sample(t, 1.0, 1.0, 1.0, "A") for t in (0.1, 0.2)])
        tb = track("B1", [b] + [sample(t, 1.0, 1.0, 1.0, "B") for t in (0.1, 0.2)])
        fused = merge_tracks(match_tracks({"A": [ta], "B": [tb]}, MergeConfig(threshold=0.0)), cfg)
        first = fused[0].samples[0]
        assert first.pos == UnifiedPoint(1.0, 1.0)
        assert first.quality == 1.0

    def test_pass_through_below_threshold(self, cfg):
        ta = const_track("A1", [0.0, 0.1], "A", x=0.0)
        tb = const_track("B1", [0.0, 0.1], "B", x=3.0)
        fused = merge_tracks(match_tracks({"A": [ta], "B": [tb]}, cfg), cfg)
        assert [t.track_id for t in fused] == ["A1", "B1"]

    def test_sample_count_and_ordering(self, cfg):
        rng = np.random.default_rng(31)
        ta = track(
            "A1",
            [sample(t, *rng.uniform(-0.05, 0.05, 2), camera="A") for t in sorted(rng.uniform(0, 5, 40))],
        )
        tb = track(
            "B1",
            [sample(t, *rng.uniform(-0.05, 0.05, 2), camera="B") for t in sorted(rng.uniform(0, 5, 25))],
        )
        fused = merge_tracks(match_tracks({"A": [ta], "B": [tb]}, MergeConfig(threshold=0.0)), cfg)
        assert len(fused) == 1
        assert len(fused[0].samples) >= 40
        ts = [s.t for s in fused[0].samples]
        assert ts == sorted(ts)

    def test_conflicting_closure_rejected(self, cfg):
        # A1=B1, B1~C1 in a later window, C1~A2 later still: accepting all
        # three merges A1 and A2, two tracks of the same camera
        a1 = window_track("A1", "A", [(0, 20, 0.0)])
        a2 = window_track("A2", "A", [(200, 10, 0.0)])
        b1 = window_track("B1", "B", [(0, 20, 0.0), (100, 15, 0.0)])
        c1 = window_track("C1", "C", [(100, 15, 0.0), (200, 10, 0.0)])
        result = match_tracks({"A": [a1, a2], "B": [b1], "C": [c1]}, cfg)
        assert sorted(result.matches) == [("A1", "B1"), ("A2", "C1"), ("B1", "C1")]
        with pytest.raises(ConflictingMatch):
            merge_tracks(result, cfg)

    def test_three_camera_chain_merges(self, cfg):
        times = [i * 0.1 for i in range(50)]
        ta = const_track("A1", times, "A")
        tb = const_track("B1", times, "B")
        tc = const_track("C1", times, "C")
        result = match_tracks({"A": [ta], "B": [tb], "C": [tc]}, cfg)
        fused = merge_tracks(result, cfg)
        assert len(fused) == 1
        assert fused[0].contributing_cameras == {"A", "B", "C"}


class TestTrackInvariants:
    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            Track.from_samples("t", [])

    def test_duplicate_time_same_camera_rejected(self):
        with pytest.raises(InvalidInput):
            Track.from_samples("t", [sample(1.0), sample(1.0)])

    def test_same_time_different_cameras_allowed(self):
        t = Track.from_samples("t", [sample(1.0, camera="A"), sample(1.0, camera="B")])
        assert len(t.samples) == 2


class TestMergeConfig:
    def test_defaults(self):
        cfg = MergeConfig()
        assert cfg.threshold == 5.0
        assert cfg.max_pair_dt == pytest.approx(1 / math.sqrt(2))
        assert cfg.d_max == 2.0

    def test_validation(self):
        with pytest.raises(InvalidInput):
            MergeConfig(max_pair_dt=0.0)
        with pytest.raises(InvalidInput):
            MergeConfig(d_max=-1.0)
        with pytest.raises(InvalidInput):
            MergeConfig(threshold=math.inf)
