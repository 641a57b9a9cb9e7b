"""Exception types shared across the package."""


class TrajfuseError(Exception):
    """Base class for all domain errors raised by trajfuse."""


class InvalidInput(TrajfuseError, ValueError):
    """An argument violates a documented precondition (non-finite value,
    wrong count, out-of-range parameter)."""


class DegenerateCalibration(TrajfuseError):
    """The three camera-frame calibration points are collinear or duplicated,
    so no affine map can be solved."""


class InsufficientCandidates(TrajfuseError):
    """Fewer than three candidate calibration points were supplied."""


class NoValidSubset(TrajfuseError):
    """Every 3-point subset of the candidates is degenerate."""


class ConflictingMatch(TrajfuseError):
    """Transitively combining the accepted matches would merge two tracks
    observed by the same camera."""


class InvalidScenario(TrajfuseError):
    """A simulation scenario violates its invariants."""


class FormatError(TrajfuseError):
    """A file could not be parsed (bad header, malformed line, missing field)."""
