"""Which three calibration points should you pick? The wide ones.

A 47-point reference grid is measured with distance-dependent noise, then
every one of the 16,215 possible 3-point calibrations is solved and scored
on the 44 points it did not use. Plotting the holdout error against the
triangle area shows the point of the area heuristic: small triangles can
be catastrophic, wide triangles bound the error. The same plot against the
triangle perimeter shows why perimeter is not the indicator to use: long,
thin triangles have large perimeters and terrible errors.

Writes demos/output/area_study.png.
"""

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from trajfuse import CameraModel, UnifiedPoint, area_error_statistics, calibration_study, measure_grid

cam = CameraModel("K1", UnifiedPoint(0, 0), yaw=0.0)  # default noise model
rows = calibration_study(measure_grid(cam, 47, seed=0))
stats = area_error_statistics(rows, n_bins=5)

print(f"{len(rows)} calibration subsets scored")
print(f"spearman(area, error)      = {stats.spearman_area:+.3f}")
print(f"spearman(perimeter, error) = {stats.spearman_perimeter:+.3f}")
print("per-bin max error, ascending area:",
      " ".join(f"{v:.3f}" for v in stats.bin_max_errors))

areas = np.array([r.area for r in rows])
perims = np.array([r.perimeter for r in rows])
errors = np.array([r.mean_error for r in rows])

wide = errors[areas >= 1.5]
print(f"\nsubsets with area >= 1.5 m^2: {wide.size}, "
      f"median error {np.median(wide):.3f} m, "
      f"90th percentile {np.percentile(wide, 90):.3f} m")

fig, axes = plt.subplots(1, 2, figsize=(11, 4.2), sharey=True)
for ax, x, label in ((axes[0], areas, "triangle area [m$^2$]"),
                     (axes[1], perims, "triangle perimeter [m]")):
    ax.scatter(x, errors, s=2, alpha=0.15, color="tab:blue", rasterized=True)
    ax.set_xlabel(label)
    ax.set_ylim(0, 2.0)
axes[0].set_ylabel("mean holdout error [m]")
axes[0].axhline(0.2, color="tab:red", lw=0.8, ls="--")
axes[0].axvline(1.5, color="tab:gray", lw=0.8, ls=":")
axes[0].set_title("area bounds the error")
axes[1].set_title("perimeter does not")

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
fig.savefig(out / "area_study.png", dpi=130, bbox_inches="tight")
print(f"plot saved to {out / 'area_study.png'}")
