"""Calibrating one depth camera into the shared room frame.

A camera reports positions as (x_cam, z_cam): lateral offset and forward
distance in its own frame. Three positions known in both the camera frame
and the room frame pin down the six coefficients of the affine projection

    x = a1*x_cam + a2*z_cam + a3
    y = b1*x_cam + b2*z_cam + b3

after which any camera measurement lands in room coordinates.
"""

import numpy as np

from trajfuse import (
    CalibrationPair,
    CameraPoint,
    UnifiedPoint,
    project,
    quality_distance,
    quality_measure,
    select_calibration_set,
    solve_calibration,
    triangle_area,
)

# Three reference positions, surveyed on the floor (room frame) and then
# measured by the camera while a person stands on each.
pairs = [
    CalibrationPair(CameraPoint(-1.2, 2.0), UnifiedPoint(2.0, 3.1), "door"),
    CalibrationPair(CameraPoint(0.1, 4.5), UnifiedPoint(4.6, 2.9), "window"),
    CalibrationPair(CameraPoint(1.4, 2.6), UnifiedPoint(2.8, 0.6), "shelf"),
]

cal = solve_calibration(pairs, camera_id="K1")
print("alpha =", np.round(cal.alpha, 4))
print("beta  =", np.round(cal.beta, 4))
print(f"triangle area: {cal.camera_triangle_area:.3f} m^2 (wider is better)")

# The map is exact at the calibration points themselves.
for pair in pairs:
    p = project(cal, pair.cam)
    print(f"  {pair.label:>7}: projected ({p.x:.6f}, {p.y:.6f}) vs surveyed "
          f"({pair.unified.x}, {pair.unified.y})")

# Any other measurement projects the same way, with a quality in [0, 1]
# that decays with distance from the calibration geometry.
measured = CameraPoint(0.3, 3.2)
p = project(cal, measured)
print(f"\nnew measurement {measured} -> room ({p.x:.3f}, {p.y:.3f}), "
      f"quality {quality_measure(cal, p):.3f} "
      f"(distance to calibration geometry {quality_distance(cal, p):.3f} m)")

# Given more than three candidates, rank every 3-subset by triangle area
# and calibrate from the widest one.
extra = pairs + [
    CalibrationPair(CameraPoint(0.0, 1.2), UnifiedPoint(1.6, 1.9), "center"),
    CalibrationPair(CameraPoint(-2.3, 4.4), UnifiedPoint(4.7, 4.6), "corner"),
]
ranked = select_calibration_set(extra, top=3)
print("\nbest 3-subsets of 5 candidates:")
for r in ranked:
    labels = ", ".join(p.label for p in r.pairs)
    print(f"  area {r.area:.3f} m^2: {labels}")

# Degenerate geometry is rejected outright: collinear points carry no
# information about the second axis.
collinear = [
    CalibrationPair(CameraPoint(i, i), UnifiedPoint(i, 0.0)) for i in range(3)
]
print("\ncollinear candidates have area", triangle_area(*(p.cam for p in collinear)))
try:
    solve_calibration(collinear, "bad")
except Exception as exc:
    print("solver says:", exc)
