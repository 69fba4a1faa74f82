"""Shoulder kinematics from wearable 9-axis IMU recordings.

Pipeline: orientation fusion per sensor, sensor-to-segment calibration
from a static pose, humerothoracic/scapulothoracic joint angles,
movement segmentation with onset detection, per-session range-of-motion
and scapulohumeral-rhythm scalars, and exact nonparametric cohort
statistics with table/figure reports. A forward-kinematics synthesizer
provides end-to-end ground truth for validation.
"""

__version__ = "0.1.0"

from .anatomy import Joint, SensorSite, calibrate, joint_angles
from .fusion import FilterConfig, ImuStream, OrientationSeries, estimate
from .geom import UnitQuaternion, decompose_euler, exp_map
from .params import SessionParameters, extract_session
from .sessionio import AnalysisConfig, SessionManifest, read_session, write_session
from .stats import (
    CohortRecord,
    TestResult,
    cohort_tables,
    mann_whitney_u,
    mean_sd,
    wilcoxon_signed_rank,
)
from .synth import MotionProfile, NoiseSpec, generate_truth, round_trip_report

__all__ = [
    "__version__",
    "AnalysisConfig",
    "CohortRecord",
    "FilterConfig",
    "ImuStream",
    "Joint",
    "MotionProfile",
    "NoiseSpec",
    "OrientationSeries",
    "SensorSite",
    "SessionManifest",
    "SessionParameters",
    "TestResult",
    "UnitQuaternion",
    "calibrate",
    "cohort_tables",
    "decompose_euler",
    "estimate",
    "exp_map",
    "extract_session",
    "generate_truth",
    "joint_angles",
    "mann_whitney_u",
    "mean_sd",
    "read_session",
    "round_trip_report",
    "wilcoxon_signed_rank",
    "write_session",
]
