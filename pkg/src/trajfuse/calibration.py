"""Per-camera affine calibration into a shared planar frame.

Each depth camera reports planar positions in its own frame: ``x_cam`` is
the lateral offset from the optical axis, ``z_cam`` the forward distance.
A camera is tied to the shared room frame ("unified" frame, plain planar
meters) by an affine map fixed by three reference positions known in both
frames::

    x = a1 * x_cam + a2 * z_cam + a3
    y = b1 * x_cam + b2 * z_cam + b3

Three non-collinear reference points give six independent equations and a
unique exact solution, so the camera pose never has to be measured
directly. The quality of a later measurement is judged by how close it
falls to the calibration geometry (the three reference points and their
barycenter): the map is exact at the reference points and degrades away
from them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateCalibration,
    InsufficientCandidates,
    InvalidInput,
    NoValidSubset,
)

# Camera-frame triangle areas below this are treated as collinear.
DEGENERACY_AREA_M2 = 1e-6

# Solved maps must reproduce their own calibration points this tightly.
NODE_TOLERANCE_M = 1e-9

# Default cap on the quality distance, in meters.
DEFAULT_D_MAX = 2.0


@dataclass(frozen=True)
class CameraPoint:
    """Planar position in one camera's own frame (lateral, forward), meters."""

    x_cam: float
    z_cam: float


@dataclass(frozen=True)
class UnifiedPoint:
    """Planar position in the shared room frame, meters."""

    x: float
    y: float


@dataclass(frozen=True)
class CalibrationPair:
    """One position known in both a camera frame and the unified frame."""

    cam: CameraPoint
    unified: UnifiedPoint
    label: str = ""


def _xy(p) -> tuple[float, float]:
    """Coordinates of a point in either frame (or a plain 2-sequence)."""
    if isinstance(p, CameraPoint):
        return (p.x_cam, p.z_cam)
    if isinstance(p, UnifiedPoint):
        return (p.x, p.y)
    x, y = p
    return (float(x), float(y))


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInput(f"{name} must be finite, got {v!r}")


def distance(p, q) -> float:
    """Euclidean distance between two points of the same frame."""
    (px, py), (qx, qy) = _xy(p), _xy(q)
    return math.hypot(px - qx, py - qy)


def triangle_area(p1, p2, p3) -> float:
    """Area of the triangle spanned by three points of one frame, in m^2.

    Computed as half the absolute cross product of two edge vectors, so it
    is symmetric under point permutation, translation invariant, and zero
    exactly for collinear points.
    """
    (x1, y1), (x2, y2), (x3, y3) = _xy(p1), _xy(p2), _xy(p3)
    _require_finite("triangle vertices", x1, y1, x2, y2, x3, y3)
    return 0.5 * abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))


@dataclass(frozen=True)
class CameraCalibration:
    """Solved affine map for one camera, plus its calibration geometry.

    ``alpha`` and ``beta`` are the coefficient triples of the two affine
    equations. ``barycenter_unified`` is the mean of the three unified
    calibration positions and ``d_max`` caps the quality distance.
    Instances are immutable and safe to share across threads.
    """

    camera_id: str
    alpha: tuple[float, float, float]
    beta: tuple[float, float, float]
    calibration_points: tuple[CalibrationPair, CalibrationPair, CalibrationPair]
    barycenter_unified: UnifiedPoint
    d_max: float = DEFAULT_D_MAX

    def __post_init__(self):
        if len(self.calibration_points) != 3:
            raise InvalidInput("a calibration holds exactly 3 calibration points")
        _require_finite("calibration coefficients", *self.alpha, *self.beta)
        if not (math.isfinite(self.d_max) and self.d_max > 0):
            raise InvalidInput(f"d_max must be positive and finite, got {self.d_max!r}")
        area = triangle_area(*(p.cam for p in self.calibration_points))
        if area < DEGENERACY_AREA_M2:
            raise DegenerateCalibration(
                f"camera-frame triangle area {area:.3g} m^2 is below the "
                f"degeneracy tolerance {DEGENERACY_AREA_M2:g} m^2"
            )
        xs = [p.unified.x for p in self.calibration_points]
        ys = [p.unified.y for p in self.calibration_points]
        bx, by = sum(xs) / 3.0, sum(ys) / 3.0
        if distance(self.barycenter_unified, (bx, by)) > NODE_TOLERANCE_M:
            raise InvalidInput("barycenter_unified is not the mean of the calibration points")
        for pair in self.calibration_points:
            if distance(project(self, pair.cam), pair.unified) > NODE_TOLERANCE_M:
                raise InvalidInput(
                    "coefficients do not reproduce the stored calibration points"
                )

    @property
    def camera_triangle_area(self) -> float:
        """Area of the calibration triangle in the camera frame, m^2."""
        return triangle_area(*(p.cam for p in self.calibration_points))


def solve_calibration(
    pairs: Sequence[CalibrationPair],
    camera_id: str,
    d_max: float = DEFAULT_D_MAX,
) -> CameraCalibration:
    """Solve the six affine coefficients from exactly three point pairs.

    The two coefficient triples share one 3x3 system whose rows are
    ``(x_cam, z_cam, 1)``; a direct solve is exact for three points. One
    iterative refinement pass keeps the residual at the calibration points
    within ``NODE_TOLERANCE_M`` even for thin triangles.

    Raises:
        InvalidInput: not exactly 3 pairs, non-finite coordinates, or
            ``d_max <= 0``.
        DegenerateCalibration: camera-frame points collinear or duplicated.
    """
    pairs = tuple(pairs)
    if len(pairs) != 3:
        raise InvalidInput(f"calibration needs exactly 3 pairs, got {len(pairs)}")
    for pair in pairs:
        _require_finite(
            "calibration pair",
            pair.cam.x_cam,
            pair.cam.z_cam,
            pair.unified.x,
            pair.unified.y,
        )
    if not (math.isfinite(d_max) and d_max > 0):
        raise InvalidInput(f"d_max must be positive and finite, got {d_max!r}")

    area = triangle_area(*(p.cam for p in pairs))
    if area < DEGENERACY_AREA_M2:
        raise DegenerateCalibration(
            f"degenerate calibration: camera-frame triangle area {area:.3g} m^2 "
            f"is below {DEGENERACY_AREA_M2:g} m^2"
        )

    m = np.array([[p.cam.x_cam, p.cam.z_cam, 1.0] for p in pairs], dtype=float)
    rhs = np.array([[p.unified.x, p.unified.y] for p in pairs], dtype=float)
    coef = np.linalg.solve(m, rhs)
    coef += np.linalg.solve(m, rhs - m @ coef)

    barycenter = UnifiedPoint(
        (pairs[0].unified.x + pairs[1].unified.x + pairs[2].unified.x) / 3.0,
        (pairs[0].unified.y + pairs[1].unified.y + pairs[2].unified.y) / 3.0,
    )
    return CameraCalibration(
        camera_id=camera_id,
        alpha=(float(coef[0, 0]), float(coef[1, 0]), float(coef[2, 0])),
        beta=(float(coef[0, 1]), float(coef[1, 1]), float(coef[2, 1])),
        calibration_points=pairs,
        barycenter_unified=barycenter,
        d_max=float(d_max),
    )


def project(cal: CameraCalibration, p: CameraPoint) -> UnifiedPoint:
    """Apply the two affine equations to a camera-frame point."""
    _require_finite("camera point", p.x_cam, p.z_cam)
    a1, a2, a3 = cal.alpha
    b1, b2, b3 = cal.beta
    return UnifiedPoint(
        a1 * p.x_cam + a2 * p.z_cam + a3,
        b1 * p.x_cam + b2 * p.z_cam + b3,
    )


def quality_distance(
    cal: CameraCalibration,
    p: UnifiedPoint,
    barycenter_only: bool = False,
) -> float:
    """Distance from ``p`` to the calibration geometry, in meters.

    By default this is the minimum over the three unified calibration
    points and their barycenter (whichever is nearest). With
    ``barycenter_only=True`` only the barycenter is considered, for
    experiments with the alternative reading of the quality model.
    """
    _require_finite("query point", p.x, p.y)
    anchors = [cal.barycenter_unified]
    if not barycenter_only:
        anchors.extend(pair.unified for pair in cal.calibration_points)
    return min(distance(p, a) for a in anchors)


@dataclass(frozen=True)
class RankedSubset:
    """One candidate 3-subset, its camera-frame triangle area, and the pairs."""

    indices: tuple[int, int, int]
    area: float
    pairs: tuple[CalibrationPair, CalibrationPair, CalibrationPair] = field(repr=False)


def select_calibration_set(
    candidates: Sequence[CalibrationPair],
    top: int | None = None,
) -> list[RankedSubset]:
    """Rank all 3-subsets of the candidates by camera-frame triangle area.

    Wider triangles bound the projection error better, so subsets are
    returned in descending area order (ties broken by index order) with
    degenerate subsets removed. The first entry is the recommended
    calibration set.

    Args:
        candidates: at least 3 calibration pairs.
        top: if given, return only the best ``top`` subsets.

    Raises:
        InsufficientCandidates: fewer than 3 candidates.
        NoValidSubset: every subset is degenerate.
    """
    n = len(candidates)
    if n < 3:
        raise InsufficientCandidates(f"need at least 3 candidates, got {n}")
    coords = np.array([[p.cam.x_cam, p.cam.z_cam] for p in candidates], dtype=float)
    if not np.all(np.isfinite(coords)):
        raise InvalidInput("candidate camera coordinates must be finite")

    idx = np.array(list(itertools.combinations(range(n), 3)), dtype=int)
    v1 = coords[idx[:, 1]] - coords[idx[:, 0]]
    v2 = coords[idx[:, 2]] - coords[idx[:, 0]]
    areas = 0.5 * np.abs(v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])

    keep = np.nonzero(areas >= DEGENERACY_AREA_M2)[0]
    if keep.size == 0:
        raise NoValidSubset("all 3-subsets of the candidates are degenerate")

    order = sorted(keep.tolist(), key=lambda k: (-areas[k], tuple(idx[k])))
    if top is not None:
        order = order[:top]
    return [
        RankedSubset(
            indices=tuple(int(i) for i in idx[k]),
            area=float(areas[k]),
            pairs=tuple(candidates[int(i)] for i in idx[k]),
        )
        for k in order
    ]
