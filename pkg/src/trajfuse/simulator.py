"""Deterministic synthetic detection streams from ground-truth scenarios.

A scenario holds camera models and walker paths in the unified frame.
Each camera samples every walker at its frame rate, gates on field of
view and depth range, and perturbs the camera-frame measurement with a
distance-dependent noise model. Everything is a pure function of the
scenario, so the same scenario (seed included) always yields bit-identical
streams.

Camera convention: ``yaw`` is the compass-style heading of the optical
axis, 0 along +y and pi/2 along +x (clockwise positive seen from above).
In the camera frame ``z_cam`` grows along the optical axis and ``x_cam``
to the right of it.

Randomness: camera ``i`` draws from ``SeedSequence((scenario.seed, i,
camera.noise.seed))``, so per-camera streams are independent substreams
and could be generated concurrently. Within one camera the draw order is:
one time-jitter draw per frame, then two position-noise draws per visible
walker in listed order. Draws are skipped entirely when the corresponding
sigma is zero, which keeps zero-noise runs exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .calibration import CalibrationPair, CameraPoint, UnifiedPoint
from .errors import InvalidInput, InvalidScenario
from .fusion import Detection

KINECT_FOV_H = math.radians(60.0)
KINECT_RANGE_MIN = 0.5
KINECT_RANGE_MAX = 5.0
KINECT_FRAME_RATE = 30.0

# Reference grid depth span (meters from the camera) and the margin that
# keeps lattice points strictly inside the field of view.
GRID_NEAR = 1.0
GRID_FAR = 5.0
GRID_FOV_MARGIN = 0.9


@dataclass(frozen=True)
class NoiseModel:
    """Distance-dependent measurement noise: sigma(d) = sigma0 + k_quad * d^2.

    ``sigma(d)`` is the per-axis standard deviation (meters) applied in the
    camera frame at Euclidean distance ``d`` from the camera. ``jitter_t``
    is the standard deviation of the frame-time jitter in seconds.
    """

    sigma0: float = 0.01
    k_quad: float = 0.0035
    jitter_t: float = 0.005
    seed: int = 0

    def __post_init__(self):
        for name in ("sigma0", "k_quad", "jitter_t"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInput(f"noise parameter {name} must be >= 0, got {v!r}")

    def sigma_at(self, dist: float) -> float:
        return self.sigma0 + self.k_quad * dist * dist

    @classmethod
    def none(cls, seed: int = 0) -> "NoiseModel":
        """All-zero noise (exact measurements, exact frame times)."""
        return cls(sigma0=0.0, k_quad=0.0, jitter_t=0.0, seed=seed)


@dataclass(frozen=True)
class CameraModel:
    """Pose and sensing envelope of one depth camera."""

    camera_id: str
    position: UnifiedPoint
    yaw: float
    fov_h: float = KINECT_FOV_H
    range_min: float = KINECT_RANGE_MIN
    range_max: float = KINECT_RANGE_MAX
    sample_rate: float = KINECT_FRAME_RATE
    noise: NoiseModel = field(default_factory=NoiseModel)
    clock_offset: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.fov_h < math.pi):
            raise InvalidInput(f"fov_h must be in (0, pi), got {self.fov_h!r}")
        if not (0.0 <= self.range_min < self.range_max):
            raise InvalidInput("need 0 <= range_min < range_max")
        if not (math.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise InvalidInput("sample_rate must be positive")


def camera_view(cam: CameraModel, p: UnifiedPoint) -> CameraPoint | None:
    """Unified-frame point as seen by the camera, or None if out of view.

    The point is translated by the camera position and rotated by the
    heading; it is visible when its forward distance lies within
    [range_min, range_max] and its bearing within half the field of view.
    No noise is applied here.
    """
    if not (math.isfinite(p.x) and math.isfinite(p.y)):
        raise InvalidInput(f"point must be finite, got ({p.x!r}, {p.y!r})")
    dx, dy = p.x - cam.position.x, p.y - cam.position.y
    cos_y, sin_y = math.cos(cam.yaw), math.sin(cam.yaw)
    x_cam = dx * cos_y - dy * sin_y
    z_cam = dx * sin_y + dy * cos_y
    if not (cam.range_min <= z_cam <= cam.range_max):
        return None
    if math.atan2(abs(x_cam), z_cam) > cam.fov_h / 2.0:
        return None
    return CameraPoint(x_cam, z_cam)


def camera_to_unified(cam: CameraModel, cp: CameraPoint) -> UnifiedPoint:
    """Exact inverse of the camera-frame transform (ignores gating)."""
    cos_y, sin_y = math.cos(cam.yaw), math.sin(cam.yaw)
    return UnifiedPoint(
        cam.position.x + cp.x_cam * cos_y + cp.z_cam * sin_y,
        cam.position.y - cp.x_cam * sin_y + cp.z_cam * cos_y,
    )


@dataclass(frozen=True)
class WalkerPath:
    """Ground-truth walker motion: piecewise-linear between timed waypoints.

    The walker exists only within its waypoint time span (a single-waypoint
    path stands still forever).
    """

    walker_id: str
    waypoints: tuple[tuple[float, UnifiedPoint], ...]

    def __post_init__(self):
        if not self.waypoints:
            raise InvalidInput(f"walker {self.walker_id!r} has no waypoints")
        times = [t for t, _ in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidInput(
                f"walker {self.walker_id!r}: waypoint times must strictly increase"
            )

    @classmethod
    def from_points(
        cls,
        walker_id: str,
        points: Sequence[UnifiedPoint],
        speed: float,
        t_start: float = 0.0,
    ) -> "WalkerPath":
        """Build a constant-speed path through the given positions."""
        if not (math.isfinite(speed) and speed > 0):
            raise InvalidInput("speed must be positive")
        t = t_start
        waypoints = [(t, points[0])]
        for prev, nxt in zip(points, points[1:]):
            t += math.hypot(nxt.x - prev.x, nxt.y - prev.y) / speed
            waypoints.append((t, nxt))
        return cls(walker_id=walker_id, waypoints=tuple(waypoints))

    @property
    def t_start(self) -> float:
        return self.waypoints[0][0]

    @property
    def t_end(self) -> float:
        return self.waypoints[-1][0]

    def position_at(self, t: float, clamp: bool = False) -> UnifiedPoint | None:
        """Interpolated position at time ``t``.

        Outside the waypoint span the walker is absent (returns None)
        unless ``clamp`` is set, in which case the nearest endpoint
        position is returned.
        """
        if len(self.waypoints) == 1:
            return self.waypoints[0][1]
        if t < self.t_start or t > self.t_end:
            if not clamp:
                return None
            return self.waypoints[0][1] if t < self.t_start else self.waypoints[-1][1]
        for (t0, p0), (t1, p1) in zip(self.waypoints, self.waypoints[1:]):
            if t <= t1:
                f = (t - t0) / (t1 - t0)
                return UnifiedPoint(p0.x + f * (p1.x - p0.x), p0.y + f * (p1.y - p0.y))
        return self.waypoints[-1][1]


@dataclass(frozen=True)
class RectOccluder:
    """Axis-aligned blocking region (furniture); suppresses a detection
    when the camera-to-walker sight line crosses it."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise InvalidInput("occluder needs x_min < x_max and y_min < y_max")

    def blocks(self, a: UnifiedPoint, b: UnifiedPoint) -> bool:
        """Segment-rectangle intersection via the slab method."""
        dx, dy = b.x - a.x, b.y - a.y
        t0, t1 = 0.0, 1.0
        for d, lo, hi, origin in (
            (dx, self.x_min, self.x_max, a.x),
            (dy, self.y_min, self.y_max, a.y),
        ):
            if d == 0.0:
                if origin < lo or origin > hi:
                    return False
                continue
            ta, tb = (lo - origin) / d, (hi - origin) / d
            if ta > tb:
                ta, tb = tb, ta
            t0, t1 = max(t0, ta), min(t1, tb)
            if t0 > t1:
                return False
        return True


@dataclass(frozen=True)
class Scenario:
    """Cameras, walkers, and timing for one simulation run.

    ``datum_offset`` records an optional constant (x, y) shift tying the
    unified frame to an external planar datum; it is carried as metadata
    only and never enters the math.
    """

    cameras: tuple[CameraModel, ...]
    walkers: tuple[WalkerPath, ...]
    duration: float
    seed: int = 0
    datum_offset: tuple[float, float] | None = None
    occluders: tuple[RectOccluder, ...] = ()

    def __post_init__(self):
        if not self.cameras:
            raise InvalidScenario("scenario has no cameras")
        if not self.walkers:
            raise InvalidScenario("scenario has no walkers")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise InvalidScenario(f"duration must be positive, got {self.duration!r}")
        cam_ids = [c.camera_id for c in self.cameras]
        if len(set(cam_ids)) != len(cam_ids):
            raise InvalidScenario("camera ids must be unique")
        walker_ids = [w.walker_id for w in self.walkers]
        if len(set(walker_ids)) != len(walker_ids):
            raise InvalidScenario("walker ids must be unique")

    def camera(self, camera_id: str) -> CameraModel:
        for c in self.cameras:
            if c.camera_id == camera_id:
                return c
        raise InvalidInput(f"no camera {camera_id!r} in scenario")


@dataclass(frozen=True)
class TruthRecord:
    """Ground truth paired with one detection: who was really where."""

    camera_id: str
    t: float
    walker_id: str
    x: float
    y: float


@dataclass(frozen=True)
class SimulationResult:
    """Per-camera detection streams plus the parallel ground truth.

    ``truth[cam][i]`` describes the walker behind ``detections[cam][i]``.
    """

    scenario: Scenario
    detections: dict[str, tuple[Detection, ...]]
    truth: dict[str, tuple[TruthRecord, ...]]


def _camera_rng(sc: Scenario, index: int) -> np.random.Generator:
    cam = sc.cameras[index]
    return np.random.default_rng(
        np.random.SeedSequence((sc.seed, index, cam.noise.seed))
    )


def simulate(sc: Scenario) -> SimulationResult:
    """Generate detection streams for every camera in the scenario.

    Each camera samples frames at ``1/sample_rate`` intervals over the
    scenario duration (endpoints included). The frame time is jittered,
    the walker position is evaluated at the jittered true time, gated by
    occluders and the camera envelope, and the camera-frame measurement is
    perturbed per the noise model. The recorded timestamp is the true
    sampling time plus the camera clock offset; detections carry
    ``person_hint = walker_id`` (the per-camera tracker is assumed
    correct).
    """
    detections: dict[str, tuple[Detection, ...]] = {}
    truth: dict[str, tuple[TruthRecord, ...]] = {}
    for index, cam in enumerate(sc.cameras):
        rng = _camera_rng(sc, index)
        n_frames = int(math.floor(sc.duration * cam.sample_rate + 1e-9)) + 1
        dets: list[Detection] = []
        truths: list[TruthRecord] = []
        for k in range(n_frames):
            t_true = k / cam.sample_rate
            if cam.noise.jitter_t > 0.0:
                t_true = float(t_true + rng.normal(0.0, cam.noise.jitter_t))
            for walker in sc.walkers:
                p = walker.position_at(t_true)
                if p is None:
                    continue
                if any(occ.blocks(cam.position, p) for occ in sc.occluders):
                    continue
                cp = camera_view(cam, p)
                if cp is None:
                    continue
                sigma = cam.noise.sigma_at(math.hypot(cp.x_cam, cp.z_cam))
                if sigma > 0.0:
                    nx, nz = rng.normal(0.0, sigma, 2)
                    cp = CameraPoint(float(cp.x_cam + nx), float(cp.z_cam + nz))
                t_stamp = t_true + cam.clock_offset
                dets.append(
                    Detection(
                        camera_id=cam.camera_id,
                        t=t_stamp,
                        pos_cam=cp,
                        person_hint=walker.walker_id,
                    )
                )
                truths.append(
                    TruthRecord(
                        camera_id=cam.camera_id,
                        t=t_stamp,
                        walker_id=walker.walker_id,
                        x=p.x,
                        y=p.y,
                    )
                )
        detections[cam.camera_id] = tuple(dets)
        truth[cam.camera_id] = tuple(truths)
    return SimulationResult(scenario=sc, detections=detections, truth=truth)


def _grid_layout(cam: CameraModel, n: int) -> list[CameraPoint]:
    """Deterministic lattice of ``n`` camera-frame points.

    Rows sit at evenly spaced depths between GRID_NEAR and GRID_FAR
    (clipped to the camera range); each row spans the field of view at
    that depth with a safety margin, and row point counts are allocated
    proportionally to row width (largest-remainder rounding, at least one
    point per row), so the lattice fills the visible trapezoid evenly.
    """
    near = max(GRID_NEAR, cam.range_min)
    far = min(GRID_FAR, cam.range_max)
    if not near < far:
        raise InvalidInput("camera range leaves no room for the reference grid")

    n_rows = max(2, int(round(math.sqrt(n))))
    n_rows = min(n_rows, n - 1) if n > 2 else 2
    depths = np.linspace(near, far, n_rows)
    half_tan = math.tan(cam.fov_h / 2.0) * GRID_FOV_MARGIN
    widths = depths * half_tan

    quotas = n * widths / widths.sum()
    counts = np.maximum(1, np.floor(quotas).astype(int))
    while counts.sum() > n:
        counts[int(np.argmax(counts))] -= 1
    remainders = quotas - counts
    while counts.sum() < n:
        k = int(np.argmax(remainders))
        counts[k] += 1
        remainders[k] = -np.inf

    points: list[CameraPoint] = []
    for z, half, count in zip(depths, widths, counts):
        xs = np.linspace(-half, half, count) if count > 1 else np.array([0.0])
        points.extend(CameraPoint(float(x), float(z)) for x in xs)
    return points


def generate_grid(cam: CameraModel, n: int = 47) -> list[CalibrationPair]:
    """Reference grid of ``n`` positions known exactly in both frames.

    Every pair holds the true camera-frame coordinates and the true
    unified coordinates of one lattice point, so each pair round-trips
    through ``camera_view`` exactly.

    Raises:
        InvalidInput: n < 3.
    """
    if n < 3:
        raise InvalidInput(f"grid needs at least 3 points, got {n}")
    return [
        CalibrationPair(cam=cp, unified=camera_to_unified(cam, cp), label=f"grid-{i:02d}")
        for i, cp in enumerate(_grid_layout(cam, n))
    ]


def measure_grid(
    cam: CameraModel,
    n: int = 47,
    seed: int | tuple = 0,
) -> list[CalibrationPair]:
    """Reference grid with measurement noise on the camera-frame side.

    Unified coordinates stay exact (the grid is surveyed on the floor);
    the camera-frame coordinates are perturbed per the camera's noise
    model, mimicking a person standing on each grid point while the
    camera measures them. Deterministic for a given seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    noisy: list[CalibrationPair] = []
    for pair in generate_grid(cam, n):
        sigma = cam.noise.sigma_at(math.hypot(pair.cam.x_cam, pair.cam.z_cam))
        cp = pair.cam
        if sigma > 0.0:
            nx, nz = rng.normal(0.0, sigma, 2)
            cp = CameraPoint(float(cp.x_cam + nx), float(cp.z_cam + nz))
        noisy.append(CalibrationPair(cam=cp, unified=pair.unified, label=pair.label))
    return noisy
