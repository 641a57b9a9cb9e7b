"""Multi-camera indoor trajectory fusion.

Depth cameras track people in their own planar frames; this package
solves each camera's affine projection into one shared room frame from
three calibration points, scores cross-camera trajectory correlations,
merges tracks of the same person, and ships a deterministic scenario
simulator plus evaluation studies so the whole pipeline can be exercised
and tuned without hardware.
"""

from .calibration import (
    CalibrationPair,
    CameraCalibration,
    CameraPoint,
    RankedSubset,
    UnifiedPoint,
    distance,
    project,
    quality_distance,
    select_calibration_set,
    solve_calibration,
    triangle_area,
)
from .errors import (
    ConflictingMatch,
    DegenerateCalibration,
    FormatError,
    InsufficientCandidates,
    InvalidInput,
    InvalidScenario,
    NoValidSubset,
    TrajfuseError,
)
from .evaluation import (
    AreaErrorStats,
    CalibrationStudyRow,
    PipelineResult,
    SeparationStudyRow,
    area_error_statistics,
    calibrate_cameras,
    calibration_study,
    matching_accuracy,
    mean_projection_error,
    run_pipeline,
    separation_study,
    tracks_from_simulation,
)
from .fusion import (
    CorrelationReport,
    Detection,
    MatchDecision,
    MatchResult,
    MergeConfig,
    PairedSample,
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
from .simulator import (
    CameraModel,
    NoiseModel,
    RectOccluder,
    Scenario,
    SimulationResult,
    TruthRecord,
    WalkerPath,
    camera_to_unified,
    camera_view,
    generate_grid,
    measure_grid,
    simulate,
)

__version__ = "0.1.0"
