"""Exception hierarchy for the toolkit.

Every error carries a ``stage`` tag (io, fusion, calib, segment, params,
stats, synth) so the CLI can name the failing pipeline stage in its
one-line diagnostic.
"""


class ShoulderKinError(Exception):
    """Base class for all toolkit errors."""

    stage = "generic"


# --- file formats / session ingestion -------------------------------------

class IoStageError(ShoulderKinError):
    stage = "io"


class ParseError(IoStageError):
    """Malformed file content. Carries the offending 1-based line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)


class ValidationError(IoStageError):
    """Well-formed file violating a declared invariant."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)


class SessionWriteError(IoStageError):
    """Refused or failed session/report emission."""


# --- orientation estimation ------------------------------------------------

class FusionStageError(ShoulderKinError):
    stage = "fusion"


class NotStill(FusionStageError):
    """Angular rate too large where a static window is required."""

    # calibration reuses this; the raiser overrides the stage
    def __init__(self, message, stage="fusion"):
        super().__init__(message)
        self.stage = stage


class DegenerateField(FusionStageError):
    """Magnetic field too close to the gravity axis to define a heading."""


class NonMonotoneTime(FusionStageError):
    """Timestamps not strictly increasing."""


class TooShort(ShoulderKinError):
    """Input shorter than the operation's minimum extent."""

    def __init__(self, message, stage="fusion"):
        super().__init__(message)
        self.stage = stage


class TimestampMismatch(FusionStageError):
    """Two series that must share a timeline do not."""


# --- calibration / joint angles ---------------------------------------------

class CalibStageError(ShoulderKinError):
    stage = "calib"


class WindowTooShort(CalibStageError):
    """Calibration window below the 1 s minimum or not covered by a stream."""


class MissingSite(CalibStageError):
    """A required sensor site has no stream or no calibration."""


class MissingCalibration(CalibStageError):
    """Joint requested for a site that was never calibrated."""


class NoOverlap(CalibStageError):
    """The two streams of a joint share no time interval."""


# --- segmentation -------------------------------------------------------------

class SegmentStageError(ShoulderKinError):
    stage = "segment"


class NoMovement(SegmentStageError):
    """No repetition peak qualifies above the detection threshold."""


class NoOnset(SegmentStageError):
    """Angular speed never sustains the onset threshold inside a repetition."""


# --- parameter extraction ----------------------------------------------------

class ParamsStageError(ShoulderKinError):
    stage = "params"


class NoValidRepetition(ParamsStageError):
    """Every repetition of a task was rejected."""


# --- statistics ----------------------------------------------------------------

class StatsStageError(ShoulderKinError):
    stage = "stats"


class TooFew(StatsStageError):
    """Sample too small for the requested descriptive statistic."""


class EmptySample(StatsStageError):
    """A test received an empty sample."""


class AllZeroDifferences(StatsStageError):
    """Paired test where every difference is zero."""


class LengthMismatch(StatsStageError):
    """Paired test with unequal sample lengths."""


class TooLarge(StatsStageError):
    """Exact enumeration requested beyond the declared size bounds."""


class EmptyGroup(StatsStageError):
    """Cohort table requested for a group with no sessions."""


# --- synthesis -------------------------------------------------------------------

class SynthStageError(ShoulderKinError):
    stage = "synth"


class InvalidProfile(SynthStageError):
    """Motion profile violates its declared invariants."""
