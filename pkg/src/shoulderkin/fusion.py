"""Per-sensor orientation estimation from 9-axis IMU streams.

A deterministic predictor-corrector complementary filter: gyroscope
strapdown integration predicts, the accelerometer corrects tilt (only
while its magnitude stays inside the gravity gate) and the magnetometer
corrects heading (horizontal component only, so magnetic dip cannot leak
into tilt). Two time constants govern the corrections; setting either to
``math.inf`` disables that correction, and with both disabled the filter
is exact strapdown integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateField,
    NonMonotoneTime,
    NotStill,
    TimestampMismatch,
    TooShort,
    ValidationError,
)
from .geom import UnitQuaternion, exp_map

#: standard gravity, m/s^2
GRAVITY = 9.80665

#: angular-rate ceiling below which a window counts as still, rad/s
STILLNESS_RATE = 0.05

_WORLD_UP = (0.0, 1.0, 0.0)


@dataclass(eq=False)
class ImuStream:
    """One sensor's recording: time plus accelerometer/gyroscope/magnetometer.

    Units are SI throughout: seconds, m/s^2, rad/s; the magnetometer is a
    unitless field direction.
    """

    site: str
    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    mag: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.accel = np.asarray(self.accel, dtype=float)
        self.gyro = np.asarray(self.gyro, dtype=float)
        self.mag = np.asarray(self.mag, dtype=float)
        n = self.t.shape[0]
        for name, arr in (("accel", self.accel), ("gyro", self.gyro), ("mag", self.mag)):
            if arr.shape != (n, 3):
                raise ValidationError(
                    f"stream {self.site!r}: {name} shape {arr.shape} does not match {n} samples"
                )
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"stream {self.site!r}: non-finite {name} value")
        if not np.all(np.isfinite(self.t)):
            raise ValidationError(f"stream {self.site!r}: non-finite timestamp")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise NonMonotoneTime(f"stream {self.site!r}: timestamps not strictly increasing")

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def sample(self, i: int) -> "ImuSample":
        return ImuSample(
            t=float(self.t[i]),
            accel=tuple(self.accel[i]),
            gyro=tuple(self.gyro[i]),
            mag=tuple(self.mag[i]),
        )


@dataclass(frozen=True)
class ImuSample:
    """A single timestamped 9-axis reading."""

    t: float
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]
    mag: tuple[float, float, float]


@dataclass(eq=False)
class OrientationSeries:
    """Sensor orientation over time; ``quats[i]`` maps sensor frame to world."""

    site: str
    t: np.ndarray
    quats: np.ndarray  # (N, 4) scalar-first

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.quats = np.asarray(self.quats, dtype=float)
        if self.quats.shape != (self.t.shape[0], 4):
            raise ValidationError(
                f"orientation series {self.site!r}: quaternion array shape mismatch"
            )

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def quat_at(self, i: int) -> UnitQuaternion:
        w, x, y, z = self.quats[i]
        return UnitQuaternion(float(w), float(x), float(y), float(z))


@dataclass(frozen=True)
class FilterConfig:
    """Complementary-filter tuning.

    ``accel_gate`` bounds (in multiples of g) freeze tilt correction while
    the accelerometer reads anything other than quasi-static gravity.
    """

    tau_accel: float = 2.0
    tau_mag: float = 5.0
    accel_gate: tuple[float, float] = (0.9, 1.1)
    still_window: float = 0.5

    def __post_init__(self):
        if not self.tau_accel > 0 or not self.tau_mag > 0:
            raise ValueError("time constants must be positive")
        lo, hi = self.accel_gate
        if not 0 < lo < hi:
            raise ValueError("accel gate must satisfy 0 < lo < hi")
        if not self.still_window > 0:
            raise ValueError("still window must be positive")


def orientation_from_field(accel, mag) -> UnitQuaternion:
    """Orientation whose inverse maps measured gravity to world +Y and the
    horizontal magnetic component to world +X.

    `accel` and `mag` are body-frame vectors (typically still-window means).
    """
    ax, ay, az = (float(c) for c in accel)
    mx, my, mz = (float(c) for c in mag)
    an = math.sqrt(ax * ax + ay * ay + az * az)
    mn = math.sqrt(mx * mx + my * my + mz * mz)
    if an < 1.0:
        raise DegenerateField(f"accelerometer magnitude {an:.3f} m/s^2 cannot define up")
    if mn < 1e-9:
        raise DegenerateField("magnetometer reading is zero")
    ux, uy, uz = ax / an, ay / an, az / an  # world up, in body frame
    cos_dip = (mx * ux + my * uy + mz * uz) / mn
    if abs(cos_dip) > math.cos(math.radians(5.0)):
        raise DegenerateField(
            "magnetic field within 5 degrees of the gravity axis; heading undefined"
        )
    # world X in body frame: magnetic direction with the vertical removed
    hx = mx / mn - cos_dip * ux
    hy = my / mn - cos_dip * uy
    hz = mz / mn - cos_dip * uz
    hn = math.sqrt(hx * hx + hy * hy + hz * hz)
    hx, hy, hz = hx / hn, hy / hn, hz / hn
    # world Z completes the right-handed triad: Z = X × Y
    zx = hy * uz - hz * uy
    zy = hz * ux - hx * uz
    zz = hx * uy - hy * ux
    # rows of the body->world matrix are the world axes in body coordinates
    return UnitQuaternion.from_rotation_matrix(((hx, hy, hz), (ux, uy, uz), (zx, zy, zz)))


def init_orientation(stream: ImuStream, cfg: FilterConfig = FilterConfig()) -> UnitQuaternion:
    """Initial orientation from the leading still window of a stream."""
    if len(stream) == 0:
        raise TooShort("empty stream", stage="fusion")
    end = stream.t[0] + cfg.still_window
    sel = stream.t <= end
    n = int(np.count_nonzero(sel))
    if n < 10:
        raise TooShort(
            f"still window holds {n} samples; at least 10 required", stage="fusion"
        )
    rates = np.linalg.norm(stream.gyro[sel], axis=1)
    mean_rate = float(np.mean(rates))
    if mean_rate >= STILLNESS_RATE:
        raise NotStill(
            f"mean angular rate {mean_rate:.4f} rad/s in the init window "
            f"(limit {STILLNESS_RATE})"
        )
    accel = np.mean(stream.accel[sel], axis=0)
    mag = np.mean(stream.mag[sel], axis=0)
    return orientation_from_field(tuple(accel), tuple(mag))


def estimate(stream: ImuStream, cfg: FilterConfig = FilterConfig()) -> OrientationSeries:
    """Run the complementary filter over one stream.

    Returns one orientation per input sample. The first orientation comes
    from the leading still window when one exists; a stream that starts in
    motion falls back to a single-sample accelerometer/magnetometer fix.
    Deterministic: identical stream and config give bit-identical output.
    """
    n = len(stream)
    if n < 2:
        raise TooShort(f"stream {stream.site!r} has {n} samples; need at least 2")

    try:
        q = init_orientation(stream, cfg)
    except (NotStill, TooShort):
        q = orientation_from_field(tuple(stream.accel[0]), tuple(stream.mag[0]))
    gate_lo = cfg.accel_gate[0] * GRAVITY
    gate_hi = cfg.accel_gate[1] * GRAVITY
    tau_a = cfg.tau_accel
    tau_m = cfg.tau_mag

    ts = stream.t.tolist()
    accs = stream.accel.tolist()
    gyrs = stream.gyro.tolist()
    mags = stream.mag.tolist()

    out = np.empty((n, 4), dtype=float)
    out[0] = q.as_tuple()
    for i in range(1, n):
        dt = ts[i] - ts[i - 1]
        gx0, gy0, gz0 = gyrs[i - 1]
        gx1, gy1, gz1 = gyrs[i]
        q = q * exp_map(
            (0.5 * (gx0 + gx1), 0.5 * (gy0 + gy1), 0.5 * (gz0 + gz1)), dt
        )

        wa = dt / tau_a
        if wa > 0.0:
            ax, ay, az = accs[i]
            an = math.sqrt(ax * ax + ay * ay + az * az)
            if gate_lo <= an <= gate_hi:
                upx, upy, upz = q.rotate((ax / an, ay / an, az / an))
                angle = math.acos(min(1.0, max(-1.0, upy)))
                # axis taking measured-up onto world up: up × Y
                rx, ry, rz = -upz, 0.0, upx
                rn = math.sqrt(rx * rx + rz * rz)
                if rn > 1e-12 and angle > 0.0:
                    q = UnitQuaternion.from_axis_angle(
                        (rx, ry, rz), angle * min(1.0, wa)
                    ) * q

        wm = dt / tau_m
        if wm > 0.0:
            mx, my, mz = mags[i]
            hx, _, hz = q.rotate((mx, my, mz))
            if hx * hx + hz * hz > 1e-18:
                psi = math.atan2(hz, hx)
                if psi != 0.0:
                    q = UnitQuaternion.from_axis_angle(
                        _WORLD_UP, psi * min(1.0, wm)
                    ) * q

        out[i] = q.as_tuple()
    return OrientationSeries(site=stream.site, t=stream.t.copy(), quats=out)


def attitude_error(a: OrientationSeries, b: OrientationSeries) -> np.ndarray:
    """Per-sample geodesic angle between two orientation series, degrees."""
    if len(a) != len(b) or not np.array_equal(a.t, b.t):
        raise TimestampMismatch(
            f"series {a.site!r} and {b.site!r} are not on the same timeline"
        )
    # angle of a ⊗ b⁻¹ via the quaternion dot product
    dots = np.abs(np.sum(a.quats * b.quats, axis=1))
    dots = np.clip(dots, -1.0, 1.0)
    return np.degrees(2.0 * np.arccos(dots))
