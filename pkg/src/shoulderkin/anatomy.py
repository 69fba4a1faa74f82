"""Sensor-to-segment calibration and anatomical joint angles.

Calibration assumes the declared static pose (upright, elbow flexed):
in that pose every segment's anatomical frame coincides with the world
frame, so the constant sensor-to-segment offset is simply the inverse of
the sensor's mean orientation over the calibration window.

Joint angles are decomposed from the relative orientation
``(q_prox ⊗ cal_prox)⁻¹ ⊗ (q_dist ⊗ cal_dist)`` after spherically
resampling the distal stream onto the proximal timeline:
humerothoracic and forearm-thoracic use YXY (elevation is the second
angle, always in [0, 180] deg), scapulothoracic uses YXZ (upward
rotation is the second angle).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    MissingCalibration,
    MissingSite,
    NoOverlap,
    NotStill,
    WindowTooShort,
)
from .fusion import OrientationSeries, STILLNESS_RATE
from .geom import UnitQuaternion, decompose_euler, mean_orientation, slerp


class SensorSite(str, Enum):
    THORAX = "thorax"
    SCAPULA = "scapula"
    HUMERUS = "humerus"
    FOREARM = "forearm"


class Joint(str, Enum):
    HUMEROTHORACIC = "humerothoracic"
    SCAPULOTHORACIC = "scapulothoracic"
    FOREARM_THORACIC = "forearm_thoracic"


#: (proximal site, distal site, Euler sequence) per joint
JOINT_DEFINITION = {
    Joint.HUMEROTHORACIC: (SensorSite.THORAX, SensorSite.HUMERUS, "YXY"),
    Joint.SCAPULOTHORACIC: (SensorSite.THORAX, SensorSite.SCAPULA, "YXZ"),
    Joint.FOREARM_THORACIC: (SensorSite.THORAX, SensorSite.FOREARM, "YXY"),
}

MIN_CALIBRATION_WINDOW = 1.0  # s


@dataclass(frozen=True)
class CalibrationResult:
    """Constant sensor-to-segment offsets from one static window."""

    offsets: Mapping[SensorSite, UnitQuaternion]
    window: tuple[float, float]
    stillness: Mapping[SensorSite, float]  # residual angular rate, rad/s

    def offset(self, site: SensorSite) -> UnitQuaternion:
        try:
            return self.offsets[site]
        except KeyError:
            raise MissingCalibration(f"site {site.value!r} was not calibrated") from None


@dataclass(eq=False)
class JointAngleSeries:
    """Anatomical angles of one joint over time, degrees."""

    joint: Joint
    sequence: str
    t: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray
    degenerate: np.ndarray

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def primary(self) -> np.ndarray:
        """The clinically reported component: elevation (YXY) or
        upward rotation (YXZ); the second angle for both sequences."""
        return self.a2

    def sliced(self, lo: float, hi: float) -> "JointAngleSeries":
        sel = (self.t >= lo) & (self.t <= hi)
        return JointAngleSeries(
            joint=self.joint,
            sequence=self.sequence,
            t=self.t[sel],
            a1=self.a1[sel],
            a2=self.a2[sel],
            a3=self.a3[sel],
            degenerate=self.degenerate[sel],
        )


def _window_quats(series: OrientationSeries, t0: float, t1: float, site: SensorSite):
    if series.t[0] > t0 or series.t[-1] < t1:
        raise WindowTooShort(
            f"stream {site.value!r} covers [{series.t[0]:.3f}, {series.t[-1]:.3f}] s, "
            f"not the calibration window [{t0:.3f}, {t1:.3f}] s"
        )
    sel = np.flatnonzero((series.t >= t0) & (series.t <= t1))
    if sel.size < 2:
        raise WindowTooShort(
            f"stream {site.value!r} has {sel.size} samples inside the calibration window"
        )
    return sel


def calibrate(
    orientations: Mapping[SensorSite, OrientationSeries],
    window: tuple[float, float],
    required: Sequence[SensorSite] | None = None,
) -> CalibrationResult:
    """Identify sensor-to-segment offsets from a static pose window.

    Raises ``NotStill`` when any site's residual angular rate in the
    window reaches the stillness ceiling, ``WindowTooShort`` for windows
    under 1 s or not covered by a stream, and ``MissingSite`` when a
    required site has no orientation series.
    """
    t0, t1 = float(window[0]), float(window[1])
    if t1 - t0 < MIN_CALIBRATION_WINDOW:
        raise WindowTooShort(
            f"calibration window [{t0:.3f}, {t1:.3f}] s is shorter than "
            f"{MIN_CALIBRATION_WINDOW} s"
        )
    if required:
        missing = [s.value for s in required if s not in orientations]
        if missing:
            raise MissingSite(f"no stream for required site(s): {', '.join(missing)}")

    offsets: dict[SensorSite, UnitQuaternion] = {}
    stillness: dict[SensorSite, float] = {}
    for site, series in orientations.items():
        sel = _window_quats(series, t0, t1, site)
        quats = [series.quat_at(i) for i in sel]
        steps = np.diff(series.t[sel])
        rates = [
            np.radians(qa.angle_to(qb)) / dt
            for qa, qb, dt in zip(quats, quats[1:], steps)
        ]
        residual = float(np.mean(rates)) if rates else 0.0
        if residual >= STILLNESS_RATE:
            raise NotStill(
                f"site {site.value!r} moves at {residual:.4f} rad/s during the "
                f"calibration window (limit {STILLNESS_RATE})",
                stage="calib",
            )
        mean_q = mean_orientation(quats)
        offsets[site] = mean_q.conjugate()
        stillness[site] = residual
    return CalibrationResult(offsets=offsets, window=(t0, t1), stillness=stillness)


def _resample(series: OrientationSeries, t_dst: np.ndarray) -> np.ndarray:
    """Spherical interpolation of an orientation series onto new times."""
    t_src = series.t
    idx = np.clip(np.searchsorted(t_src, t_dst, side="right") - 1, 0, len(t_src) - 2)
    out = np.empty((len(t_dst), 4))
    for k, td in enumerate(t_dst):
        i = int(idx[k])
        ta, tb = t_src[i], t_src[i + 1]
        u = 0.0 if tb == ta else float((td - ta) / (tb - ta))
        u = min(1.0, max(0.0, u))
        if u == 0.0:
            out[k] = series.quats[i]
        elif u == 1.0:
            out[k] = series.quats[i + 1]
        else:
            out[k] = slerp(series.quat_at(i), series.quat_at(i + 1), u).as_tuple()
    return out


def joint_angles(
    orientations: Mapping[SensorSite, OrientationSeries],
    cal: CalibrationResult,
    joint: Joint,
) -> JointAngleSeries:
    """Anatomical angle series of one joint on the proximal timeline."""
    prox_site, dist_site, sequence = JOINT_DEFINITION[joint]
    for site in (prox_site, dist_site):
        if site not in orientations:
            raise MissingSite(f"joint {joint.value!r} needs a stream for {site.value!r}")
    prox = orientations[prox_site]
    dist = orientations[dist_site]
    cal_p = cal.offset(prox_site)
    cal_d = cal.offset(dist_site)

    lo = max(prox.t[0], dist.t[0])
    hi = min(prox.t[-1], dist.t[-1])
    sel = np.flatnonzero((prox.t >= lo) & (prox.t <= hi))
    if hi <= lo or sel.size < 2:
        raise NoOverlap(
            f"streams {prox_site.value!r} and {dist_site.value!r} share no usable "
            "time interval"
        )
    t = prox.t[sel]
    dist_quats = _resample(dist, t)

    n = sel.size
    a1 = np.empty(n)
    a2 = np.empty(n)
    a3 = np.empty(n)
    degenerate = np.empty(n, dtype=bool)
    for k in range(n):
        i = int(sel[k])
        q_p = prox.quat_at(i) * cal_p
        q_d = UnitQuaternion(*dist_quats[k]) * cal_d
        q_rel = q_p.conjugate() * q_d
        e = decompose_euler(q_rel, sequence)
        a1[k], a2[k], a3[k] = e.a1, e.a2, e.a3
        degenerate[k] = e.degenerate
    return JointAngleSeries(
        joint=joint, sequence=sequence, t=t, a1=a1, a2=a2, a3=a3, degenerate=degenerate
    )
