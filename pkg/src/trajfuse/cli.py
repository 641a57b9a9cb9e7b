"""Command-line pipeline: calibrate, project, merge, simulate, evaluate.

Exit codes: 0 on success, 1 on usage or file-parse problems, 2 on domain
errors (degenerate calibration, conflicting matches, invalid scenarios).
All commands are deterministic for identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import formats
from .calibration import select_calibration_set, solve_calibration
from .errors import FormatError, TrajfuseError
from .evaluation import (
    area_error_statistics,
    calibration_study,
    matching_accuracy,
    separation_study,
)
from .formats import PipelineConfig
from .fusion import match_tracks, merge_tracks, quality_measure
from .calibration import project as project_point
from .scenarios import BUILTIN_SCENARIOS
from .simulator import Scenario, measure_grid, simulate


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _status(message: str) -> None:
    print(message, file=sys.stderr)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}")


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, newline="")
        _status(f"wrote {output}")


def _load_config(args) -> PipelineConfig:
    cfg = (
        formats.parse_pipeline_config(_read(args.config))
        if getattr(args, "config", None)
        else PipelineConfig()
    )
    merge = cfg.merge
    overrides = {}
    for field, attr in (
        ("threshold", "threshold"),
        ("max_pair_dt", "max_pair_dt"),
        ("d_max", "d_max"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides[field] = value
    if overrides:
        merge = dataclasses.replace(merge, **overrides)
    return dataclasses.replace(cfg, merge=merge)


def _resolve_scenario(name_or_path: str, seed: int | None) -> Scenario:
    if name_or_path in BUILTIN_SCENARIOS:
        sc = BUILTIN_SCENARIOS[name_or_path]()
    else:
        sc = formats.parse_scenario(_read(name_or_path))
    if seed is not None:
        sc = dataclasses.replace(sc, seed=seed)
    return sc


def _report_issues(issues, path: str) -> None:
    for lineno, message in issues:
        _warn(f"{path}: line {lineno}: {message}")


def cmd_calibrate(args) -> int:
    pairs = formats.parse_pairs(_read(args.pairs_file))
    if len(pairs) < 3:
        raise FormatError(f"{args.pairs_file}: needs at least 3 pairs, found {len(pairs)}")
    if len(pairs) > 3:
        if not args.select:
            raise FormatError(
                f"{args.pairs_file}: found {len(pairs)} pairs; pass --select to pick "
                "the widest 3-point subset"
            )
        best = select_calibration_set(pairs, top=1)[0]
        pairs = list(best.pairs)
        _status(f"selected pairs {best.indices} with area {best.area:.6g} m^2")
    cal = solve_calibration(pairs, args.camera_id, d_max=args.d_max)
    area = cal.camera_triangle_area
    _status(f"calibration triangle area: {area:.6g} m^2")
    if area < 1.5:
        _warn(
            f"triangle area {area:.3g} m^2 is below the 1.5 m^2 working area; "
            "projection error grows as the triangle shrinks"
        )
    _emit(formats.write_calibration(cal), args.output)
    return 0


def cmd_project(args) -> int:
    cal = formats.parse_calibration(_read(args.calibration))
    detections, issues = formats.parse_detections(
        _read(args.detections_file), strict=args.strict
    )
    _report_issues(issues, args.detections_file)
    rows = []
    for i, det in enumerate(detections):
        if det.camera_id != cal.camera_id:
            _warn(
                f"detection {i}: camera_id {det.camera_id!r} does not match "
                f"calibration camera {cal.camera_id!r}"
            )
        pos = project_point(cal, det.pos_cam)
        rows.append(
            formats.SampleRow(
                camera_id=det.camera_id,
                t=det.t,
                x=pos.x,
                y=pos.y,
                quality=quality_measure(cal, pos),
                person_hint=det.person_hint,
            )
        )
    _emit(formats.write_samples(rows), args.output)
    return 0


def cmd_merge(args) -> int:
    cfg = _load_config(args)
    if cfg.calibration_paths:
        for camera_id, path in sorted(cfg.calibration_paths.items()):
            cal = formats.parse_calibration(_read(path))
            if cal.d_max != cfg.merge.d_max:
                _warn(
                    f"calibration {camera_id!r} has d_max {cal.d_max}, config says "
                    f"{cfg.merge.d_max}"
                )
    rows = []
    for path in args.sample_files:
        file_rows, issues = formats.parse_samples(_read(path), strict=args.strict)
        _report_issues(issues, path)
        rows.extend(file_rows)
    if not rows:
        raise FormatError("no samples to merge")
    tracks = formats.sample_rows_to_tracks(rows)
    result = match_tracks(tracks, cfg.merge)
    fused = merge_tracks(result, cfg.merge)
    for decision in result.decisions:
        _status(
            f"{decision.report.track_pair[0]} / {decision.report.track_pair[1]}: "
            f"C={decision.report.c:.6g} n={decision.report.n_pairs} -> {decision.reason}"
        )
    outdir = Path(args.output_dir or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    tracks_path = outdir / "fused_tracks.tsv"
    report_path = outdir / "correlation_report.tsv"
    tracks_path.write_text(formats.write_tracks(fused), newline="")
    report_path.write_text(
        formats.write_match_report(result.decisions, cfg.merge.threshold), newline=""
    )
    _status(f"wrote {tracks_path}")
    _status(f"wrote {report_path}")
    return 0


def cmd_simulate(args) -> int:
    sc = _resolve_scenario(args.scenario_file, args.seed)
    sim = simulate(sc)
    outdir = Path(args.output_dir or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    for cam in sc.cameras:
        path = outdir / f"{cam.camera_id}.detections.tsv"
        path.write_text(formats.write_detections(sim.detections[cam.camera_id]), newline="")
        _status(f"wrote {path}")
    truth = [r for cam in sc.cameras for r in sim.truth[cam.camera_id]]
    truth_path = outdir / "ground_truth.tsv"
    truth_path.write_text(formats.write_truth(truth), newline="")
    _status(f"wrote {truth_path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    sc = _resolve_scenario(args.scenario, args.seed)
    if args.study == "calibration":
        index = 0
        if args.camera is not None:
            ids = [c.camera_id for c in sc.cameras]
            if args.camera not in ids:
                raise FormatError(f"scenario has no camera {args.camera!r}")
            index = ids.index(args.camera)
        cam = sc.cameras[index]
        grid = measure_grid(cam, n=args.points, seed=(sc.seed, index, cam.noise.seed, 1))
        rows = calibration_study(grid)
        stats = area_error_statistics(rows)
        _status(
            f"spearman(area, error)={stats.spearman_area:.4f} "
            f"spearman(perimeter, error)={stats.spearman_perimeter:.4f}"
        )
        _status(
            "per-bin max error (ascending area): "
            + " ".join(f"{v:.4g}" for v in stats.bin_max_errors)
        )
        _emit(formats.write_calibration_study(rows), args.output)
    elif args.study == "separation":
        offsets = [float(v) for v in args.offsets.split(",")]
        rows = separation_study(sc, offsets, cfg.merge)
        _emit(formats.write_separation_study(rows), args.output)
    else:  # matching
        accuracy = matching_accuracy(sc, cfg.merge)
        _emit(f"metric\tvalue\naccuracy\t{accuracy:.9g}\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--config", default=None, help="pipeline config YAML")
    common.add_argument(
        "--strict", action="store_true", help="abort on malformed input lines"
    )
    common.add_argument("--output-dir", default=None, help="directory for output files")

    parser = _Parser(prog="trajfuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "calibrate", parents=[common], help="solve a camera calibration from point pairs"
    )
    p.add_argument("pairs_file", help="pairs file (x_cam z_cam x y label)")
    p.add_argument("--camera-id", required=True)
    p.add_argument("--d-max", type=float, default=2.0, help="quality distance cap, meters")
    p.add_argument(
        "--select",
        action="store_true",
        help="with more than 3 pairs, use the widest-area 3-subset",
    )
    p.add_argument("--output", default=None, help="calibration file (default stdout)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser(
        "project", parents=[common], help="project a detection stream to the unified frame"
    )
    p.add_argument("detections_file")
    p.add_argument("--calibration", required=True, help="calibration file to apply")
    p.add_argument("--output", default=None, help="samples file (default stdout)")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser(
        "merge", parents=[common], help="match and merge projected sample files"
    )
    p.add_argument("sample_files", nargs="+")
    p.add_argument("--threshold", type=float, default=None, help="merge threshold on C")
    p.add_argument("--max-pair-dt", type=float, default=None, help="pairing time cap, s")
    p.add_argument("--d-max", type=float, default=None, help="quality distance cap, m")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser(
        "simulate", parents=[common], help="generate detection streams from a scenario"
    )
    p.add_argument(
        "scenario_file",
        help=f"scenario YAML or one of {sorted(BUILTIN_SCENARIOS)}",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", parents=[common], help="run a study on a scenario")
    p.add_argument("study", choices=["calibration", "separation", "matching"])
    p.add_argument(
        "--scenario",
        default="walkthrough",
        help=f"scenario YAML or one of {sorted(BUILTIN_SCENARIOS)}",
    )
    p.add_argument("--camera", default=None, help="camera id for the calibration study")
    p.add_argument("--points", type=int, default=47, help="reference grid size")
    p.add_argument(
        "--offsets",
        default="0,0.25,0.5,1,2",
        help="comma-separated offsets in seconds for the separation study",
    )
    p.add_argument("--output", default=None, help="study table file (default stdout)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrajfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
