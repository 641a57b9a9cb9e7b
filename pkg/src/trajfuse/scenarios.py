"""Ready-made scenarios for the standard experiments.

All factories describe the same 6 m x 4 m office: one camera on each side
wall at mid height of the room, facing each other across a wide shared
coverage zone. Walkers cross the room at walking speed.
"""

from __future__ import annotations

import math

from .calibration import UnifiedPoint
from .simulator import CameraModel, NoiseModel, RectOccluder, Scenario, WalkerPath

ROOM_X = 6.0
ROOM_Y = 4.0

# Yaw is a compass-style heading: +pi/2 faces +x, -pi/2 faces -x.
_FACING_POS_X = math.pi / 2.0
_FACING_NEG_X = -math.pi / 2.0

# Waypoints of the canonical door-to-door walk, right door to left wall.
_CROSSING_POINTS = (
    UnifiedPoint(6.2, 1.4),
    UnifiedPoint(4.8, 1.5),
    UnifiedPoint(3.2, 2.3),
    UnifiedPoint(1.8, 2.5),
    UnifiedPoint(0.6, 2.2),
)


def _office_cameras(noise: NoiseModel | None) -> tuple[CameraModel, CameraModel]:
    noise = NoiseModel() if noise is None else noise
    k1 = CameraModel(
        camera_id="K1",
        position=UnifiedPoint(5.7, 2.0),
        yaw=_FACING_NEG_X,
        noise=noise,
    )
    k2 = CameraModel(
        camera_id="K2",
        position=UnifiedPoint(0.3, 2.0),
        yaw=_FACING_POS_X,
        noise=noise,
    )
    return k1, k2


def walkthrough_scenario(
    speed: float = 1.2,
    seed: int = 0,
    noise: NoiseModel | None = None,
    with_desk: bool = False,
) -> Scenario:
    """One walker crossing the office, seen by both facing cameras.

    The walker enters at the right door (outside K1's view, picked up by
    K2 first), crosses the shared coverage, and leaves at the left wall.
    ``with_desk`` adds a desk-sized occluder near the room center.
    """
    walker = WalkerPath.from_points("w0", _CROSSING_POINTS, speed=speed)
    occluders = (RectOccluder(2.6, 0.6, 3.6, 1.2),) if with_desk else ()
    return Scenario(
        cameras=_office_cameras(noise),
        walkers=(walker,),
        duration=walker.t_end + 0.1,
        seed=seed,
        occluders=occluders,
    )


def follower_scenario(
    gap_s: float = 1.0,
    speed: float = 1.2,
    seed: int = 0,
    noise: NoiseModel | None = None,
) -> Scenario:
    """Two walkers on the identical path, the second ``gap_s`` behind.

    The worst case for trajectory pairing: the only separating evidence is
    the time offset between otherwise identical paths.
    """
    lead = WalkerPath.from_points("w0", _CROSSING_POINTS, speed=speed)
    chase = WalkerPath.from_points("w1", _CROSSING_POINTS, speed=speed, t_start=gap_s)
    return Scenario(
        cameras=_office_cameras(noise),
        walkers=(lead, chase),
        duration=chase.t_end + 0.1,
        seed=seed,
    )


def multi_walker_scenario(
    n_walkers: int = 5,
    seed: int = 0,
    noise: NoiseModel | None = None,
) -> Scenario:
    """``n_walkers`` people on distinct lanes, alternating directions.

    Lanes are spread across the room height; odd walkers travel right to
    left and even ones left to right, with staggered starts and slightly
    different speeds so crossings happen at varying points.
    """
    if n_walkers < 1:
        raise ValueError("need at least one walker")
    lane_lo, lane_hi = 1.25, 2.75
    walkers = []
    for i in range(n_walkers):
        frac = i / (n_walkers - 1) if n_walkers > 1 else 0.5
        y = lane_lo + frac * (lane_hi - lane_lo)
        points = (
            UnifiedPoint(5.4, y),
            UnifiedPoint(3.0, y + (0.15 if i % 2 else -0.15)),
            UnifiedPoint(0.8, y),
        )
        if i % 2:
            points = tuple(reversed(points))
        walkers.append(
            WalkerPath.from_points(
                f"w{i}",
                points,
                speed=1.0 + 0.1 * i,
                t_start=0.4 * i,
            )
        )
    duration = max(w.t_end for w in walkers) + 0.1
    return Scenario(
        cameras=_office_cameras(noise),
        walkers=tuple(walkers),
        duration=duration,
        seed=seed,
    )


BUILTIN_SCENARIOS = {
    "walkthrough": walkthrough_scenario,
    "follower": follower_scenario,
    "five-walkers": multi_walker_scenario,
}
