"""Cross-camera trajectory correlation, matching, and merging.

Two cameras watching the same person produce two tracks of unified-frame
samples. Each candidate pairing of samples (one per camera) is scored by

    Q_i = q_a * q_b * max(0, 1 - 2*dt^2)      quality factor, in [0, 1]
    D_i = 1 - d^2                             distance factor, <= 1
    C_i = D_i * Q_i

where ``q_a`` and ``q_b`` are the per-sample measurement qualities, ``dt``
the time gap in seconds and ``d`` the distance in meters between the two
positions. ``D_i`` turns negative past one meter of disagreement, so
mismatched tracks accumulate negative evidence. The track-level
correlation ``C`` is the plain (unnormalized) sum of the ``C_i``; it
therefore grows with overlap duration, and all pairing decisions use the
raw sum. A threshold removes impossible matches, then the highest
correlation wins each pairing slot.

All scoring functions are pure; tracks and reports are immutable.
"""

from __future__ import annotations

import itertools
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .calibration import (
    CameraCalibration,
    CameraPoint,
    UnifiedPoint,
    distance,
    quality_distance,
)
from .errors import ConflictingMatch, InvalidInput

# Time gap at which the time-quality factor reaches zero: 1 - 2*dt^2 = 0.
TIME_QUALITY_ZERO_S = math.sqrt(0.5)

DEFAULT_THRESHOLD = 5.0


@dataclass(frozen=True)
class Detection:
    """One timestamped camera-frame measurement of one person.

    ``person_hint`` is the local track id assigned by the per-camera body
    tracker. ``vertical`` carries an optional height coordinate from the
    source record; it is kept as opaque metadata and never enters any
    computation (positioning is strictly planar).
    """

    camera_id: str
    t: float
    pos_cam: CameraPoint
    person_hint: str | None = None
    vertical: float | None = None


@dataclass(frozen=True)
class Sample:
    """One unified-frame track sample with its measurement quality."""

    t: float
    pos: UnifiedPoint
    quality: float
    source_camera: str

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.pos.x) and math.isfinite(self.pos.y)):
            raise InvalidInput("sample time and position must be finite")
        if not (0.0 <= self.quality <= 1.0):
            raise InvalidInput(f"sample quality must be in [0, 1], got {self.quality!r}")


@dataclass(frozen=True)
class Track:
    """Time-ordered samples attributed to one person hypothesis."""

    track_id: str
    samples: tuple[Sample, ...]
    contributing_cameras: frozenset[str]

    @classmethod
    def from_samples(
        cls,
        track_id: str,
        samples: Iterable[Sample],
        cameras: frozenset[str] | None = None,
    ) -> "Track":
        """Build a track, sorting samples by time and validating invariants.

        ``cameras`` widens the contributing set beyond the sample labels;
        merged tracks use it, since a fused sample carries only one of its
        two constituent cameras.
        """
        ordered = tuple(sorted(samples, key=lambda s: (s.t, s.source_camera)))
        if not ordered:
            raise InvalidInput(f"track {track_id!r} has no samples")
        last_t: dict[str, float] = {}
        for s in ordered:
            prev = last_t.get(s.source_camera)
            if prev is not None and s.t <= prev:
                raise InvalidInput(
                    f"track {track_id!r}: samples from camera {s.source_camera!r} "
                    f"are not strictly increasing in time (t={s.t})"
                )
            last_t[s.source_camera] = s.t
        labeled = frozenset(s.source_camera for s in ordered)
        return cls(
            track_id=track_id,
            samples=ordered,
            contributing_cameras=labeled | cameras if cameras else labeled,
        )

    @property
    def t_start(self) -> float:
        return self.samples[0].t

    @property
    def t_end(self) -> float:
        return self.samples[-1].t


@dataclass(frozen=True)
class PairedSample:
    """One scored association of two samples from different cameras."""

    a: Sample
    b: Sample
    delta_t: float
    d: float
    c_i: float

    @property
    def d_factor(self) -> float:
        """Distance factor 1 - d^2 (may be negative)."""
        return 1.0 - self.d * self.d

    @property
    def q_factor(self) -> float:
        """Quality factor q_a * q_b * q_time, in [0, 1]."""
        return self.a.quality * self.b.quality * quality_time(self.delta_t)


@dataclass(frozen=True)
class CorrelationReport:
    """Correlation between two tracks: the sum C over all paired samples."""

    track_pair: tuple[str, str]
    c: float
    pairs: tuple[PairedSample, ...]
    n_pairs: int

    def __post_init__(self):
        if self.n_pairs != len(self.pairs):
            raise InvalidInput("n_pairs does not match the pair list")
        total = sum(p.c_i for p in self.pairs)
        if not math.isclose(self.c, total, rel_tol=1e-12, abs_tol=1e-12):
            raise InvalidInput("C does not equal the sum of the per-pair correlations")

    @property
    def c_per_pair(self) -> float:
        """Diagnostic only: C normalized by pair count (decisions use raw C)."""
        return self.c / self.n_pairs if self.n_pairs else 0.0


@dataclass(frozen=True)
class MergeConfig:
    """Tunables for pairing and matching.

    ``threshold`` is the minimum raw correlation for a merge candidate (an
    empirical value, re-derivable per deployment with the time-offset
    study). ``max_pair_dt`` caps the sample pairing gap; past
    ``TIME_QUALITY_ZERO_S`` pairs contribute nothing, so that is the
    default. ``d_max`` is the quality-distance cap handed to new
    calibrations built inside pipeline runs.
    """

    threshold: float = DEFAULT_THRESHOLD
    max_pair_dt: float = TIME_QUALITY_ZERO_S
    d_max: float = 2.0

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise InvalidInput("threshold must be finite")
        if not (math.isfinite(self.max_pair_dt) and self.max_pair_dt > 0):
            raise InvalidInput("max_pair_dt must be positive")
        if not (math.isfinite(self.d_max) and self.d_max > 0):
            raise InvalidInput("d_max must be positive")


def quality_measure(
    cal: CameraCalibration,
    p: UnifiedPoint,
    barycenter_only: bool = False,
) -> float:
    """Measurement quality in [0, 1]: 1 at the calibration geometry, 0 at
    ``d_max`` meters or more from it."""
    d = quality_distance(cal, p, barycenter_only=barycenter_only)
    return 1.0 - min(d, cal.d_max) / cal.d_max


def quality_time(delta_t: float) -> float:
    """Time-proximity quality max(0, 1 - 2*dt^2) for a gap in seconds."""
    if not (math.isfinite(delta_t) and delta_t >= 0):
        raise InvalidInput(f"delta_t must be finite and non-negative, got {delta_t!r}")
    return max(0.0, 1.0 - 2.0 * delta_t * delta_t)


def sample_correlation(a: Sample, b: Sample) -> PairedSample:
    """Score one association of two samples from different cameras."""
    if a.source_camera == b.source_camera:
        raise InvalidInput(
            f"cannot correlate two samples from the same camera {a.source_camera!r}"
        )
    delta_t = abs(a.t - b.t)
    d = distance(a.pos, b.pos)
    q_i = a.quality * b.quality * quality_time(delta_t)
    d_i = 1.0 - d * d
    return PairedSample(a=a, b=b, delta_t=delta_t, d=d, c_i=d_i * q_i)


def pair_samples(ta: Track, tb: Track, cfg: MergeConfig) -> list[PairedSample]:
    """Associate samples of two tracks, nearest in time first.

    Candidate pairs are every cross-track pair with a time gap of at most
    ``cfg.max_pair_dt``. They are accepted greedily by ascending gap (ties
    broken by the earlier sample time in ``ta``, then in ``tb``), each
    sample used at most once. The result is ordered by time and may be
    empty.
    """
    tb_times = [s.t for s in tb.samples]
    candidates: list[tuple[float, float, float, int, int]] = []
    for i, sa in enumerate(ta.samples):
        lo = bisect_left(tb_times, sa.t - cfg.max_pair_dt)
        hi = bisect_right(tb_times, sa.t + cfg.max_pair_dt)
        for j in range(lo, hi):
            candidates.append((abs(sa.t - tb_times[j]), sa.t, tb_times[j], i, j))
    candidates.sort()

    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs: list[PairedSample] = []
    for _, _, _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append(sample_correlation(ta.samples[i], tb.samples[j]))
    pairs.sort(key=lambda p: (p.a.t, p.b.t))
    return pairs


def trajectory_correlation(ta: Track, tb: Track, cfg: MergeConfig) -> CorrelationReport:
    """Correlation C between two tracks: the sum of C_i over paired samples.

    The tracks must come from disjoint camera sets. With no pairable
    samples the report carries C = 0.
    """
    if ta.contributing_cameras & tb.contributing_cameras:
        raise InvalidInput(
            f"tracks {ta.track_id!r} and {tb.track_id!r} share a camera"
        )
    pairs = tuple(pair_samples(ta, tb, cfg))
    return CorrelationReport(
        track_pair=(ta.track_id, tb.track_id),
        c=sum(p.c_i for p in pairs),
        pairs=pairs,
        n_pairs=len(pairs),
    )


@dataclass(frozen=True)
class MatchDecision:
    """Outcome for one candidate track pair considered by the matcher."""

    report: CorrelationReport
    accepted: bool
    reason: str  # "accepted" | "below_threshold" | "camera_slot_taken"


@dataclass(frozen=True)
class MatchResult:
    """All matcher decisions plus the tracks they were computed from."""

    decisions: tuple[MatchDecision, ...]
    tracks_by_camera: dict[str, tuple[Track, ...]] = field(repr=False)

    @property
    def matches(self) -> list[tuple[str, str]]:
        return [d.report.track_pair for d in self.decisions if d.accepted]

    @property
    def reports(self) -> list[CorrelationReport]:
        return [d.report for d in self.decisions]


def match_tracks(
    tracks_by_camera: Mapping[str, Sequence[Track]],
    cfg: MergeConfig,
) -> MatchResult:
    """Decide cross-camera track pairings from pairwise correlations.

    Every cross-camera track pair is scored. Pairs below ``cfg.threshold``
    are discarded (the threshold only removes impossible matches), then
    the remaining candidates are accepted greedily in descending C, each
    track claimed at most once per other camera. Greedy highest-first is
    deliberate and can diverge from the optimal assignment; the decisions
    list records why each candidate was accepted or not.
    """
    frozen: dict[str, tuple[Track, ...]] = {
        cam: tuple(sorted(tracks_by_camera[cam], key=lambda t: t.track_id))
        for cam in sorted(tracks_by_camera)
    }
    reports: list[CorrelationReport] = []
    for cam_a, cam_b in itertools.combinations(sorted(frozen), 2):
        for ta in frozen[cam_a]:
            for tb in frozen[cam_b]:
                reports.append(trajectory_correlation(ta, tb, cfg))

    camera_of = {
        t.track_id: cam for cam, tracks in frozen.items() for t in tracks
    }
    order = sorted(reports, key=lambda r: (-r.c, r.track_pair))
    taken: set[tuple[str, str]] = set()  # (track_id, other camera)
    decisions: list[MatchDecision] = []
    for report in order:
        id_a, id_b = report.track_pair
        cam_a, cam_b = camera_of[id_a], camera_of[id_b]
        if report.c < cfg.threshold:
            decisions.append(MatchDecision(report, False, "below_threshold"))
        elif (id_a, cam_b) in taken or (id_b, cam_a) in taken:
            decisions.append(MatchDecision(report, False, "camera_slot_taken"))
        else:
            taken.add((id_a, cam_b))
            taken.add((id_b, cam_a))
            decisions.append(MatchDecision(report, True, "accepted"))
    return MatchResult(decisions=tuple(decisions), tracks_by_camera=frozen)


def _fuse_pair(a: Sample, b: Sample) -> Sample:
    """Fuse two paired samples into one.

    The fused sample sits at the earlier timestamp (keeping that sample's
    source camera, which preserves per-camera time ordering) and at the
    quality-weighted mean position. Its quality is the better of the two
    constituents.
    """
    earlier = a if a.t <= b.t else b
    w = a.quality + b.quality
    if w > 0:
        x = (a.quality * a.pos.x + b.quality * b.pos.x) / w
        y = (a.quality * a.pos.y + b.quality * b.pos.y) / w
    else:
        x = 0.5 * (a.pos.x + b.pos.x)
        y = 0.5 * (a.pos.y + b.pos.y)
    return Sample(
        t=earlier.t,
        pos=UnifiedPoint(x, y),
        quality=max(a.quality, b.quality),
        source_camera=earlier.source_camera,
    )


def _merge_two(ta: Track, tb: Track, cfg: MergeConfig) -> Track:
    """Merge two tracks: fuse paired samples, pass the rest through."""
    pairs = pair_samples(ta, tb, cfg)
    paired_a = {id(p.a) for p in pairs}
    paired_b = {id(p.b) for p in pairs}
    merged = [_fuse_pair(p.a, p.b) for p in pairs]
    merged.extend(s for s in ta.samples if id(s) not in paired_a)
    merged.extend(s for s in tb.samples if id(s) not in paired_b)
    track_id = "+".join(sorted(ta.track_id.split("+") + tb.track_id.split("+")))
    return Track.from_samples(
        track_id, merged, cameras=ta.contributing_cameras | tb.contributing_cameras
    )


def merge_tracks(result: MatchResult, cfg: MergeConfig) -> list[Track]:
    """Fuse matched tracks into one track per person hypothesis.

    Accepted matches are applied in descending correlation order; the
    transitive closure of matches forms one fused track per group, and
    unmatched tracks pass through unchanged. Within each overlap the fused
    position is the quality-weighted mean of the paired samples.

    Raises:
        ConflictingMatch: the closure would merge two tracks seen by the
            same camera.
    """
    current: dict[str, Track] = {
        t.track_id: t for tracks in result.tracks_by_camera.values() for t in tracks
    }
    root: dict[str, str] = {tid: tid for tid in current}

    def find(tid: str) -> str:
        while root[tid] != tid:
            root[tid] = root[root[tid]]
            tid = root[tid]
        return tid

    accepted = [d.report for d in result.decisions if d.accepted]
    for report in sorted(accepted, key=lambda r: (-r.c, r.track_pair)):
        ra, rb = find(report.track_pair[0]), find(report.track_pair[1])
        if ra == rb:
            continue
        ta, tb = current[ra], current[rb]
        overlap = ta.contributing_cameras & tb.contributing_cameras
        if overlap:
            raise ConflictingMatch(
                f"match {report.track_pair} would merge two tracks from "
                f"camera(s) {sorted(overlap)}"
            )
        fused = _merge_two(ta, tb, cfg)
        root[rb] = ra
        del current[rb]
        current[ra] = fused
    return sorted(current.values(), key=lambda t: t.track_id)
