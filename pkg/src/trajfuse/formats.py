"""File codecs for the pipeline's on-disk interfaces.

Stream-like data (detections, projected samples, fused tracks, study
tables) uses line-oriented tab-separated text: ``#`` comment lines, then
one header line naming the columns, then one record per line. Floats are
written with 9 significant digits, missing optional values as ``-``.
Configuration (scenarios, pipeline settings) uses YAML since it nests.
Writers are canonical, so writing back a parsed file reproduces it byte
for byte.

Calibration files store the camera id, the quality-distance cap and the
three calibration pairs; the affine coefficients are re-solved on load
(the pairs are authoritative) and, when present in the file, checked
against the fresh solve so stale hand edits are caught.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import yaml

from .calibration import (
    CalibrationPair,
    CameraCalibration,
    CameraPoint,
    UnifiedPoint,
    solve_calibration,
)
from .errors import FormatError
from .evaluation import CalibrationStudyRow, SeparationStudyRow
from .fusion import Detection, MatchDecision, MergeConfig, Sample, Track
from .simulator import (
    CameraModel,
    NoiseModel,
    RectOccluder,
    Scenario,
    TruthRecord,
    WalkerPath,
)

MISSING = "-"

# Tolerance for coefficients stored in a calibration file against the
# fresh solve from its pairs (files carry 9 significant digits).
COEFFICIENT_CHECK_TOL = 1e-6


def _fmt(v: float) -> str:
    return "%.9g" % float(v)


def _parse_float(field: str, what: str, lineno: int) -> float:
    try:
        v = float(field)
    except ValueError:
        raise FormatError(f"line {lineno}: {what} is not a number: {field!r}")
    if not math.isfinite(v):
        raise FormatError(f"line {lineno}: {what} must be finite, got {field!r}")
    return v


def _content_lines(text: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, [f.strip() for f in raw.split("\t")]


def _check_kind(text: str, kind: str) -> None:
    for raw in text.splitlines():
        s = raw.strip()
        if not s:
            continue
        if s.startswith("# trajfuse "):
            found = s.removeprefix("# trajfuse ").split()[0]
            if found != kind:
                raise FormatError(f"expected a {kind} file, found {found!r}")
        return


def _read_header(
    lines: Iterable[tuple[int, list[str]]],
    expected: Sequence[str],
    kind: str,
) -> Iterable[tuple[int, list[str]]]:
    it = iter(lines)
    try:
        lineno, fields = next(it)
    except StopIteration:
        raise FormatError(f"{kind} file has no header line")
    if fields != list(expected):
        raise FormatError(
            f"line {lineno}: bad {kind} header {fields!r}, expected {list(expected)!r}"
        )
    return it


# ---------------------------------------------------------------------------
# calibration pairs


PAIRS_HEADER = ("x_cam", "z_cam", "x", "y", "label")


def write_pairs(pairs: Sequence[CalibrationPair]) -> str:
    lines = ["# trajfuse pairs v1", "\t".join(PAIRS_HEADER)]
    for p in pairs:
        lines.append(
            "\t".join(
                (
                    _fmt(p.cam.x_cam),
                    _fmt(p.cam.z_cam),
                    _fmt(p.unified.x),
                    _fmt(p.unified.y),
                    p.label or MISSING,
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_pairs(text: str) -> list[CalibrationPair]:
    _check_kind(text, "pairs")
    rows = _read_header(_content_lines(text), PAIRS_HEADER, "pairs")
    pairs = []
    for lineno, fields in rows:
        if len(fields) != 5:
            raise FormatError(f"line {lineno}: expected 5 fields, got {len(fields)}")
        xc, zc, x, y = (
            _parse_float(fields[i], PAIRS_HEADER[i], lineno) for i in range(4)
        )
        label = "" if fields[4] == MISSING else fields[4]
        pairs.append(
            CalibrationPair(cam=CameraPoint(xc, zc), unified=UnifiedPoint(x, y), label=label)
        )
    return pairs


# ---------------------------------------------------------------------------
# calibration files


def write_calibration(cal: CameraCalibration) -> str:
    lines = [
        "# trajfuse calibration v1",
        "# pairs are authoritative; coefficients are checked on load",
        f"camera_id\t{cal.camera_id}",
        f"d_max\t{_fmt(cal.d_max)}",
        "alpha\t" + "\t".join(_fmt(v) for v in cal.alpha),
        "beta\t" + "\t".join(_fmt(v) for v in cal.beta),
    ]
    for p in cal.calibration_points:
        lines.append(
            "pair\t"
            + "\t".join(
                (
                    _fmt(p.cam.x_cam),
                    _fmt(p.cam.z_cam),
                    _fmt(p.unified.x),
                    _fmt(p.unified.y),
                    p.label or MISSING,
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_calibration(text: str) -> CameraCalibration:
    _check_kind(text, "calibration")
    camera_id: str | None = None
    d_max: float | None = None
    stored: dict[str, tuple[float, float, float]] = {}
    pairs: list[CalibrationPair] = []
    for lineno, fields in _content_lines(text):
        key = fields[0]
        if key == "camera_id":
            if len(fields) != 2:
                raise FormatError(f"line {lineno}: camera_id takes one value")
            camera_id = fields[1]
        elif key == "d_max":
            d_max = _parse_float(fields[1], "d_max", lineno)
        elif key in ("alpha", "beta"):
            if len(fields) != 4:
                raise FormatError(f"line {lineno}: {key} takes three values")
            stored[key] = tuple(
                _parse_float(f, key, lineno) for f in fields[1:]
            )  # type: ignore[assignment]
        elif key == "pair":
            if len(fields) != 6:
                raise FormatError(f"line {lineno}: pair takes five values")
            xc, zc, x, y = (
                _parse_float(fields[i], "pair coordinate", lineno) for i in range(1, 5)
            )
            label = "" if fields[5] == MISSING else fields[5]
            pairs.append(
                CalibrationPair(CameraPoint(xc, zc), UnifiedPoint(x, y), label)
            )
        else:
            raise FormatError(f"line {lineno}: unknown calibration key {key!r}")
    if camera_id is None:
        raise FormatError("calibration file missing field 'camera_id'")
    if d_max is None:
        raise FormatError("calibration file missing field 'd_max'")
    if len(pairs) != 3:
        raise FormatError(f"calibration file needs exactly 3 pairs, found {len(pairs)}")
    cal = solve_calibration(pairs, camera_id, d_max=d_max)
    for key, solved in (("alpha", cal.alpha), ("beta", cal.beta)):
        if key in stored:
            for have, want in zip(stored[key], solved):
                if abs(have - want) > COEFFICIENT_CHECK_TOL * max(1.0, abs(want)):
                    raise FormatError(
                        f"stored {key} coefficients disagree with the calibration "
                        f"pairs (stale edit?): {stored[key]} vs {solved}"
                    )
    return cal


# ---------------------------------------------------------------------------
# detection streams


DETECTIONS_HEADER = ("camera_id", "t", "x_cam", "z_cam", "person_hint", "vertical")


def write_detections(detections: Sequence[Detection]) -> str:
    lines = ["# trajfuse detections v1", "\t".join(DETECTIONS_HEADER)]
    for d in detections:
        lines.append(
            "\t".join(
                (
                    d.camera_id,
                    _fmt(d.t),
                    _fmt(d.pos_cam.x_cam),
                    _fmt(d.pos_cam.z_cam),
                    d.person_hint if d.person_hint is not None else MISSING,
                    _fmt(d.vertical) if d.vertical is not None else MISSING,
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_detections(
    text: str,
    strict: bool = False,
) -> tuple[list[Detection], list[tuple[int, str]]]:
    """Parse a detection stream.

    Returns the detections plus a list of (line number, message) issues
    for malformed lines, which are skipped. With ``strict`` the first
    issue raises ``FormatError`` instead.
    """
    _check_kind(text, "detections")
    rows = _read_header(_content_lines(text), DETECTIONS_HEADER, "detections")
    detections: list[Detection] = []
    issues: list[tuple[int, str]] = []

    def bad(lineno: int, message: str) -> None:
        if strict:
            raise FormatError(f"line {lineno}: {message}")
        issues.append((lineno, message))

    for lineno, fields in rows:
        if len(fields) != 6:
            bad(lineno, f"expected 6 fields, got {len(fields)}")
            continue
        try:
            t = _parse_float(fields[1], "t", lineno)
            xc = _parse_float(fields[2], "x_cam", lineno)
            zc = _parse_float(fields[3], "z_cam", lineno)
            vertical = (
                None if fields[5] == MISSING else _parse_float(fields[5], "vertical", lineno)
            )
        except FormatError as exc:
            if strict:
                raise
            issues.append((lineno, str(exc).split(": ", 1)[1]))
            continue
        detections.append(
            Detection(
                camera_id=fields[0],
                t=t,
                pos_cam=CameraPoint(xc, zc),
                person_hint=None if fields[4] == MISSING else fields[4],
                vertical=vertical,
            )
        )
    return detections, issues


# ---------------------------------------------------------------------------
# projected samples


SAMPLES_HEADER = ("camera_id", "t", "x", "y", "quality", "person_hint")


@dataclass(frozen=True)
class SampleRow:
    """One projected sample plus the tracker hint it arrived with."""

    camera_id: str
    t: float
    x: float
    y: float
    quality: float
    person_hint: str | None

    def to_sample(self) -> Sample:
        return Sample(
            t=self.t,
            pos=UnifiedPoint(self.x, self.y),
            quality=self.quality,
            source_camera=self.camera_id,
        )


def write_samples(rows: Sequence[SampleRow]) -> str:
    lines = ["# trajfuse samples v1", "\t".join(SAMPLES_HEADER)]
    for r in rows:
        lines.append(
            "\t".join(
                (
                    r.camera_id,
                    _fmt(r.t),
                    _fmt(r.x),
                    _fmt(r.y),
                    _fmt(r.quality),
                    r.person_hint if r.person_hint is not None else MISSING,
                )
            )
        )
    return "\n".join(lines) + "\n"


def parse_samples(
    text: str,
    strict: bool = False,
) -> tuple[list[SampleRow], list[tuple[int, str]]]:
    _check_kind(text, "samples")
    rows_it = _read_header(_content_lines(text), SAMPLES_HEADER, "samples")
    rows: list[SampleRow] = []
    issues: list[tuple[int, str]] = []
    for lineno, fields in rows_it:
        if len(fields) != 6:
            msg = f"expected 6 fields, got {len(fields)}"
            if strict:
                raise FormatError(f"line {lineno}: {msg}")
            issues.append((lineno, msg))
            continue
        try:
            t = _parse_float(fields[1], "t", lineno)
            x = _parse_float(fields[2], "x", lineno)
            y = _parse_float(fields[3], "y", lineno)
            q = _parse_float(fields[4], "quality", lineno)
        except FormatError as exc:
            if strict:
                raise
            issues.append((lineno, str(exc).split(": ", 1)[1]))
            continue
        rows.append(
            SampleRow(
                camera_id=fields[0],
                t=t,
                x=x,
                y=y,
                quality=q,
                person_hint=None if fields[5] == MISSING else fields[5],
            )
        )
    return rows, issues


def sample_rows_to_tracks(rows: Sequence[SampleRow]) -> dict[str, list[Track]]:
    """Group sample rows into per-camera tracks keyed by tracker hint."""
    grouped: dict[str, dict[str, list[Sample]]] = {}
    for r in rows:
        grouped.setdefault(r.camera_id, {}).setdefault(r.person_hint or "0", []).append(
            r.to_sample()
        )
    return {
        camera_id: [
            Track.from_samples(f"{camera_id}:{hint}", samples)
            for hint, samples in sorted(hints.items())
        ]
        for camera_id, hints in sorted(grouped.items())
    }


# ---------------------------------------------------------------------------
# fused tracks


TRACKS_HEADER = ("track_id", "t", "x", "y", "quality")


def write_tracks(tracks: Sequence[Track]) -> str:
    lines = ["# trajfuse tracks v1", "\t".join(TRACKS_HEADER)]
    for track in tracks:
        for s in track.samples:
            lines.append(
                "\t".join(
                    (track.track_id, _fmt(s.t), _fmt(s.pos.x), _fmt(s.pos.y), _fmt(s.quality))
                )
            )
    return "\n".join(lines) + "\n"


def parse_track_rows(text: str) -> list[tuple[str, float, float, float, float]]:
    """Rows of a fused-track file as (track_id, t, x, y, quality) tuples."""
    _check_kind(text, "tracks")
    rows_it = _read_header(_content_lines(text), TRACKS_HEADER, "tracks")
    out = []
    for lineno, fields in rows_it:
        if len(fields) != 5:
            raise FormatError(f"line {lineno}: expected 5 fields, got {len(fields)}")
        out.append(
            (
                fields[0],
                _parse_float(fields[1], "t", lineno),
                _parse_float(fields[2], "x", lineno),
                _parse_float(fields[3], "y", lineno),
                _parse_float(fields[4], "quality", lineno),
            )
        )
    return out


# ---------------------------------------------------------------------------
# ground truth


TRUTH_HEADER = ("camera_id", "t", "walker_id", "x", "y")


def write_truth(records: Sequence[TruthRecord]) -> str:
    lines = ["# trajfuse truth v1", "\t".join(TRUTH_HEADER)]
    for r in records:
        lines.append(
            "\t".join((r.camera_id, _fmt(r.t), r.walker_id, _fmt(r.x), _fmt(r.y)))
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# study tables and match reports


def write_calibration_study(rows: Sequence[CalibrationStudyRow]) -> str:
    lines = ["# trajfuse calibration-study v1", "subset\tarea\tperimeter\tmean_error"]
    for r in rows:
        subset = "-".join(str(i) for i in r.subset)
        lines.append(
            f"{subset}\t{_fmt(r.area)}\t{_fmt(r.perimeter)}\t{_fmt(r.mean_error)}"
        )
    return "\n".join(lines) + "\n"


def write_separation_study(rows: Sequence[SeparationStudyRow]) -> str:
    lines = ["# trajfuse separation-study v1", "offset\tC\tn_pairs"]
    for r in rows:
        lines.append(f"{_fmt(r.offset)}\t{_fmt(r.c)}\t{r.n_pairs}")
    return "\n".join(lines) + "\n"


def write_match_report(decisions: Sequence[MatchDecision], threshold: float) -> str:
    lines = [
        "# trajfuse match-report v1",
        f"# threshold {_fmt(threshold)}",
        "track_a\ttrack_b\tC\tn_pairs\tc_per_pair\tdecision",
    ]
    for d in decisions:
        r = d.report
        lines.append(
            "\t".join(
                (
                    r.track_pair[0],
                    r.track_pair[1],
                    _fmt(r.c),
                    str(r.n_pairs),
                    _fmt(r.c_per_pair),
                    d.reason,
                )
            )
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# scenario YAML


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise FormatError(f"{where} missing field {key!r}")
    return mapping[key]


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise FormatError(f"{where} has unknown field(s) {sorted(unknown)!r}")


def _noise_from_dict(d: dict, where: str) -> NoiseModel:
    _reject_unknown(d, {"sigma0", "k_quad", "jitter_t", "seed"}, where)
    return NoiseModel(
        sigma0=float(d.get("sigma0", 0.01)),
        k_quad=float(d.get("k_quad", 0.0035)),
        jitter_t=float(d.get("jitter_t", 0.005)),
        seed=int(d.get("seed", 0)),
    )


def _camera_from_dict(d: dict) -> CameraModel:
    where = f"camera {d.get('camera_id', '?')!r}"
    _reject_unknown(
        d,
        {
            "camera_id",
            "position",
            "yaw",
            "yaw_deg",
            "fov_h",
            "fov_deg",
            "range_min",
            "range_max",
            "sample_rate",
            "noise",
            "clock_offset",
        },
        where,
    )
    if "yaw" in d and "yaw_deg" in d:
        raise FormatError(f"{where}: give yaw or yaw_deg, not both")
    if "yaw" in d:
        yaw = float(d["yaw"])
    elif "yaw_deg" in d:
        yaw = math.radians(float(d["yaw_deg"]))
    else:
        raise FormatError(f"{where} missing field 'yaw'")
    if "fov_h" in d and "fov_deg" in d:
        raise FormatError(f"{where}: give fov_h or fov_deg, not both")
    fov = (
        float(d["fov_h"])
        if "fov_h" in d
        else math.radians(float(d["fov_deg"])) if "fov_deg" in d else math.radians(60.0)
    )
    pos = _require(d, "position", where)
    return CameraModel(
        camera_id=str(_require(d, "camera_id", "camera")),
        position=UnifiedPoint(float(pos[0]), float(pos[1])),
        yaw=yaw,
        fov_h=fov,
        range_min=float(d.get("range_min", 0.5)),
        range_max=float(d.get("range_max", 5.0)),
        sample_rate=float(d.get("sample_rate", 30.0)),
        noise=_noise_from_dict(d.get("noise", {}), f"{where} noise"),
        clock_offset=float(d.get("clock_offset", 0.0)),
    )


def _walker_from_dict(d: dict) -> WalkerPath:
    where = f"walker {d.get('walker_id', '?')!r}"
    _reject_unknown(d, {"walker_id", "waypoints"}, where)
    waypoints = _require(d, "waypoints", where)
    return WalkerPath(
        walker_id=str(_require(d, "walker_id", "walker")),
        waypoints=tuple(
            (float(w[0]), UnifiedPoint(float(w[1]), float(w[2]))) for w in waypoints
        ),
    )


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise FormatError("scenario file must hold a mapping")
    _reject_unknown(
        data,
        {"cameras", "walkers", "duration", "seed", "datum_offset", "occluders"},
        "scenario",
    )
    cameras = tuple(_camera_from_dict(c) for c in _require(data, "cameras", "scenario"))
    walkers = tuple(_walker_from_dict(w) for w in _require(data, "walkers", "scenario"))
    datum = data.get("datum_offset")
    occluders = tuple(
        RectOccluder(float(o[0]), float(o[1]), float(o[2]), float(o[3]))
        for o in data.get("occluders", [])
    )
    return Scenario(
        cameras=cameras,
        walkers=walkers,
        duration=float(_require(data, "duration", "scenario")),
        seed=int(data.get("seed", 0)),
        datum_offset=(float(datum[0]), float(datum[1])) if datum is not None else None,
        occluders=occluders,
    )


def scenario_to_dict(sc: Scenario) -> dict:
    data: dict = {
        "duration": sc.duration,
        "seed": sc.seed,
        "cameras": [
            {
                "camera_id": c.camera_id,
                "position": [c.position.x, c.position.y],
                "yaw": c.yaw,
                "fov_h": c.fov_h,
                "range_min": c.range_min,
                "range_max": c.range_max,
                "sample_rate": c.sample_rate,
                "clock_offset": c.clock_offset,
                "noise": {
                    "sigma0": c.noise.sigma0,
                    "k_quad": c.noise.k_quad,
                    "jitter_t": c.noise.jitter_t,
                    "seed": c.noise.seed,
                },
            }
            for c in sc.cameras
        ],
        "walkers": [
            {
                "walker_id": w.walker_id,
                "waypoints": [[t, p.x, p.y] for t, p in w.waypoints],
            }
            for w in sc.walkers
        ],
    }
    if sc.datum_offset is not None:
        data["datum_offset"] = list(sc.datum_offset)
    if sc.occluders:
        data["occluders"] = [
            [o.x_min, o.y_min, o.x_max, o.y_max] for o in sc.occluders
        ]
    return data


def parse_scenario(text: str) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise FormatError(f"scenario file is not valid YAML: {exc}")
    return scenario_from_dict(data)


def write_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=True)


# ---------------------------------------------------------------------------
# pipeline configuration YAML


@dataclass(frozen=True)
class PipelineConfig:
    """Settings shared by the pipeline commands.

    ``calibration_paths`` maps camera ids to calibration files;
    ``datum_offset`` is carried into outputs as metadata only.
    """

    merge: MergeConfig = MergeConfig()
    calibration_paths: dict[str, str] | None = None
    inputs: tuple[str, ...] = ()
    output_dir: str | None = None
    datum_offset: tuple[float, float] | None = None


def parse_pipeline_config(text: str) -> PipelineConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise FormatError(f"config file is not valid YAML: {exc}")
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise FormatError("config file must hold a mapping")
    _reject_unknown(
        data,
        {
            "threshold",
            "max_pair_dt",
            "d_max",
            "calibrations",
            "inputs",
            "output_dir",
            "datum_offset",
        },
        "config",
    )
    merge = MergeConfig(
        threshold=float(data.get("threshold", MergeConfig.threshold)),
        max_pair_dt=float(data.get("max_pair_dt", MergeConfig.max_pair_dt)),
        d_max=float(data.get("d_max", MergeConfig.d_max)),
    )
    calibrations = data.get("calibrations")
    if calibrations is not None and not isinstance(calibrations, dict):
        raise FormatError("config field 'calibrations' must map camera ids to paths")
    datum = data.get("datum_offset")
    return PipelineConfig(
        merge=merge,
        calibration_paths=(
            {str(k): str(v) for k, v in calibrations.items()} if calibrations else None
        ),
        inputs=tuple(str(p) for p in data.get("inputs", ())),
        output_dir=data.get("output_dir"),
        datum_offset=(float(datum[0]), float(datum[1])) if datum is not None else None,
    )
