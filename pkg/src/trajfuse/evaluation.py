"""Accuracy and separation studies against simulator ground truth.

The calibration study sweeps every 3-point subset of a measured reference
grid, solves a calibration from each, and scores the projection error on
the held-out points; its output feeds the area-versus-error and
perimeter-versus-error analyses. The separation study shifts one camera's
stream in time and watches the trajectory correlation degrade, which is
how the merge threshold is picked for a deployment. The matching study
runs the whole pipeline (calibrate, project, match, merge) and checks the
fused tracks against ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .calibration import (
    DEGENERACY_AREA_M2,
    CalibrationPair,
    CameraCalibration,
    UnifiedPoint,
    distance,
    project,
    select_calibration_set,
    solve_calibration,
)
from .errors import InvalidInput, InvalidScenario
from .fusion import (
    MatchResult,
    MergeConfig,
    Sample,
    Track,
    match_tracks,
    merge_tracks,
    quality_measure,
    trajectory_correlation,
)
from .simulator import Scenario, SimulationResult, measure_grid, simulate


@dataclass(frozen=True)
class CalibrationStudyRow:
    """One 3-subset of the grid: its triangle geometry and holdout error."""

    subset: tuple[int, int, int]
    area: float
    perimeter: float
    mean_error: float


@dataclass(frozen=True)
class SeparationStudyRow:
    """Trajectory correlation after shifting one camera by ``offset``."""

    offset: float
    c: float
    n_pairs: int


def mean_projection_error(
    cal: CameraCalibration,
    holdout: Sequence[CalibrationPair],
) -> float:
    """Mean distance between projected and reference positions, meters."""
    if not holdout:
        raise InvalidInput("holdout set is empty")
    total = 0.0
    for pair in holdout:
        total += distance(project(cal, pair.cam), pair.unified)
    return total / len(holdout)


def calibration_study(grid: Sequence[CalibrationPair]) -> list[CalibrationStudyRow]:
    """Leave-three-in projection study over every grid subset.

    For each non-degenerate 3-subset of the grid a calibration is solved
    from the (possibly noisy) camera-frame measurements, and the mean
    projection error is computed over all remaining grid points against
    their reference unified positions. Rows come back in subset index
    order. The whole sweep is vectorized: one batched 3x3 solve for all
    subsets, then one projection of the full grid per subset.
    """
    n = len(grid)
    if n < 4:
        raise InvalidInput(f"grid study needs at least 4 points, got {n}")
    cam = np.array([[p.cam.x_cam, p.cam.z_cam] for p in grid], dtype=float)
    ref = np.array([[p.unified.x, p.unified.y] for p in grid], dtype=float)

    idx = np.array(
        [(i, j, k) for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)],
        dtype=int,
    )
    a, b, c = cam[idx[:, 0]], cam[idx[:, 1]], cam[idx[:, 2]]
    v1, v2 = b - a, c - a
    areas = 0.5 * np.abs(v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
    perims = (
        np.linalg.norm(b - a, axis=1)
        + np.linalg.norm(c - b, axis=1)
        + np.linalg.norm(a - c, axis=1)
    )
    keep = areas >= DEGENERACY_AREA_M2
    idx, areas, perims = idx[keep], areas[keep], perims[keep]
    m = idx.shape[0]

    # One linear system per subset, both coefficient triples share it.
    mats = np.concatenate(
        [cam[idx], np.ones((m, 3, 1))], axis=2
    )  # (m, 3, 3) rows (x, z, 1)
    rhs = ref[idx]  # (m, 3, 2)
    coef = np.linalg.solve(mats, rhs)  # (m, 3, 2)

    grid_h = np.concatenate([cam, np.ones((n, 1))], axis=1)  # (n, 3)
    proj = np.einsum("nk,mkd->mnd", grid_h, coef)  # (m, n, 2)
    err = np.linalg.norm(proj - ref[None, :, :], axis=2)  # (m, n)
    rows_idx = np.arange(m)[:, None]
    err[rows_idx, idx] = 0.0
    mean_err = err.sum(axis=1) / (n - 3)

    return [
        CalibrationStudyRow(
            subset=(int(i), int(j), int(k)),
            area=float(areas[r]),
            perimeter=float(perims[r]),
            mean_error=float(mean_err[r]),
        )
        for r, (i, j, k) in enumerate(idx)
    ]


@dataclass(frozen=True)
class AreaErrorStats:
    """Summary statistics of a calibration study."""

    spearman_area: float
    spearman_perimeter: float
    bin_max_errors: tuple[float, ...]
    n_rows: int

    @property
    def bins_non_increasing(self) -> int:
        """How many bins (out of all) have max error <= the previous bin's.

        The first bin has nothing to its left and counts as satisfying.
        """
        ok = 1
        for prev, cur in zip(self.bin_max_errors, self.bin_max_errors[1:]):
            if cur <= prev:
                ok += 1
        return ok


def area_error_statistics(
    rows: Sequence[CalibrationStudyRow],
    n_bins: int = 5,
) -> AreaErrorStats:
    """Rank correlations and per-area-bin maxima for a study output.

    Bins are equal-count quantile bins in ascending area order, which is
    robust to the grid's uneven area distribution; the per-bin maximum
    error captures the upper-bound trend.
    """
    if len(rows) < n_bins:
        raise InvalidInput("not enough study rows for the requested bins")
    areas = np.array([r.area for r in rows])
    perims = np.array([r.perimeter for r in rows])
    errs = np.array([r.mean_error for r in rows])
    rho_area = float(stats.spearmanr(areas, errs).statistic)
    rho_perim = float(stats.spearmanr(perims, errs).statistic)
    order = np.argsort(areas, kind="stable")
    bin_max = tuple(
        float(errs[chunk].max()) for chunk in np.array_split(order, n_bins)
    )
    return AreaErrorStats(
        spearman_area=rho_area,
        spearman_perimeter=rho_perim,
        bin_max_errors=bin_max,
        n_rows=len(rows),
    )


def _grid_seed(sc: Scenario, camera_index: int) -> tuple:
    # Grid measurement noise gets its own substream, disjoint from the
    # detection streams (third component differs from _camera_rng's).
    cam = sc.cameras[camera_index]
    return (sc.seed, camera_index, cam.noise.seed, 1)


def calibrate_cameras(
    sc: Scenario,
    cfg: MergeConfig,
    grid_points: int = 47,
) -> dict[str, CameraCalibration]:
    """Calibrate every scenario camera from a measured reference grid.

    Each camera measures the standard grid under its own noise model and
    the widest-area 3-subset is used, which is the recommended practice.
    """
    calibrations: dict[str, CameraCalibration] = {}
    for index, cam in enumerate(sc.cameras):
        pairs = measure_grid(cam, n=grid_points, seed=_grid_seed(sc, index))
        best = select_calibration_set(pairs, top=1)[0]
        calibrations[cam.camera_id] = solve_calibration(
            best.pairs, cam.camera_id, d_max=cfg.d_max
        )
    return calibrations


def tracks_from_simulation(
    sim: SimulationResult,
    calibrations: dict[str, CameraCalibration],
) -> dict[str, list[Track]]:
    """Project detections and group them into per-camera tracks.

    Detections are grouped by their per-camera tracker hint (a missing
    hint falls into group "0"); track ids are ``<camera>:<hint>``.
    """
    out: dict[str, list[Track]] = {}
    for camera_id, dets in sim.detections.items():
        cal = calibrations[camera_id]
        by_hint: dict[str, list[Sample]] = {}
        for det in dets:
            pos = project(cal, det.pos_cam)
            sample = Sample(
                t=det.t,
                pos=pos,
                quality=quality_measure(cal, pos),
                source_camera=camera_id,
            )
            by_hint.setdefault(det.person_hint or "0", []).append(sample)
        out[camera_id] = [
            Track.from_samples(f"{camera_id}:{hint}", samples)
            for hint, samples in sorted(by_hint.items())
        ]
    return out


@dataclass(frozen=True)
class PipelineResult:
    """Everything produced by one end-to-end run."""

    scenario: Scenario
    sim: SimulationResult = field(repr=False)
    calibrations: dict[str, CameraCalibration] = field(repr=False)
    tracks_by_camera: dict[str, list[Track]] = field(repr=False)
    match_result: MatchResult = field(repr=False)
    fused_tracks: list[Track] = field(repr=False)


def run_pipeline(sc: Scenario, cfg: MergeConfig | None = None) -> PipelineResult:
    """Calibrate, simulate, project, match, and merge in one go."""
    cfg = cfg or MergeConfig()
    calibrations = calibrate_cameras(sc, cfg)
    sim = simulate(sc)
    tracks = tracks_from_simulation(sim, calibrations)
    result = match_tracks(tracks, cfg)
    fused = merge_tracks(result, cfg)
    return PipelineResult(
        scenario=sc,
        sim=sim,
        calibrations=calibrations,
        tracks_by_camera=tracks,
        match_result=result,
        fused_tracks=fused,
    )


def _shift_track(track: Track, offset: float) -> Track:
    samples = [
        Sample(t=s.t + offset, pos=s.pos, quality=s.quality, source_camera=s.source_camera)
        for s in track.samples
    ]
    return Track.from_samples(track.track_id, samples)


def separation_study(
    sc: Scenario,
    offsets: Sequence[float],
    cfg: MergeConfig | None = None,
) -> list[SeparationStudyRow]:
    """Correlation of one walker's two camera tracks under time offsets.

    The scenario's first walker is tracked by the first two cameras; for
    each offset the second camera's samples are shifted by that many
    seconds and the trajectory correlation recomputed. One row per offset,
    in the given order.

    Raises:
        InvalidScenario: fewer than two cameras, or the two tracks share
            no pairable samples at zero offset.
    """
    cfg = cfg or MergeConfig()
    if len(sc.cameras) < 2:
        raise InvalidScenario("separation study needs at least two cameras")
    calibrations = calibrate_cameras(sc, cfg)
    tracks = tracks_from_simulation(simulate(sc), calibrations)
    walker_id = sc.walkers[0].walker_id
    cam_a, cam_b = sc.cameras[0].camera_id, sc.cameras[1].camera_id

    def track_of(camera_id: str) -> Track:
        for t in tracks.get(camera_id, []):
            if t.track_id == f"{camera_id}:{walker_id}":
                return t
        raise InvalidScenario(
            f"camera {camera_id!r} never observed walker {walker_id!r}"
        )

    ta, tb = track_of(cam_a), track_of(cam_b)
    baseline = trajectory_correlation(ta, tb, cfg)
    if baseline.n_pairs == 0:
        raise InvalidScenario("the two cameras share no overlap at zero offset")

    rows = []
    for offset in offsets:
        report = trajectory_correlation(ta, _shift_track(tb, offset), cfg)
        rows.append(
            SeparationStudyRow(offset=float(offset), c=report.c, n_pairs=report.n_pairs)
        )
    return rows


def _attribute_sample(sample: Sample, sc: Scenario, clock_offsets: dict[str, float]) -> str:
    t_true = sample.t - clock_offsets[sample.source_camera]
    best_id, best_d = "", math.inf
    for walker in sc.walkers:
        p = walker.position_at(t_true, clamp=True)
        d = distance(sample.pos, p)
        if d < best_d:
            best_id, best_d = walker.walker_id, d
    return best_id


def matching_accuracy(
    sc: Scenario,
    cfg: MergeConfig | None = None,
    purity: float = 0.95,
) -> float:
    """Fraction of fused tracks dominated by a single true walker.

    Runs the full pipeline, attributes every fused sample to the nearest
    ground-truth walker at its (clock-corrected) time, and counts a track
    as correct when its most frequent walker accounts for at least
    ``purity`` of its samples. Returns 1.0 for a run with no tracks.
    """
    result = run_pipeline(sc, cfg)
    offsets = {c.camera_id: c.clock_offset for c in sc.cameras}
    if not result.fused_tracks:
        return 1.0
    pure = 0
    for track in result.fused_tracks:
        counts: dict[str, int] = {}
        for sample in track.samples:
            wid = _attribute_sample(sample, sc, offsets)
            counts[wid] = counts.get(wid, 0) + 1
        if max(counts.values()) >= purity * len(track.samples):
            pure += 1
    return pure / len(result.fused_tracks)
