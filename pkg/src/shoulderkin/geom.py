"""Quaternion and rotation algebra for anatomical angle computation.

Conventions, fixed package-wide:

* Hamilton product, scalar-first storage ``(w, x, y, z)``.
* Right-handed world frame: X anterior, Y up, Z right.
* A quaternion maps body-frame vectors into the world frame:
  ``v_world = q.rotate(v_body)``.
* Canonical sign: ``w >= 0``; if ``w == 0`` the first nonzero of
  ``x, y, z`` is made non-negative. ``q`` and ``-q`` therefore compare
  equal as rotations.

Humerothoracic angles use the YXY sequence (plane of elevation,
elevation, axial rotation); scapulothoracic angles use YXZ (protraction,
upward rotation, tilt). Both are intrinsic sequences: the rotation is
``R = R_axis1(a1) @ R_axis2(a2) @ R_axis3(a3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

Vec3 = tuple[float, float, float]

#: Half-width of the band around the YXY/YXZ singular configurations in
#: which the decomposition switches to its degenerate resolution (a1 := 0).
GIMBAL_BAND_DEG = 1.0

_EPS_NORM = 1e-12


def _clamp(v: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True, slots=True)
class UnitQuaternion:
    """Unit quaternion; always stored normalized with canonical sign."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n2 = self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        if not math.isfinite(n2) or n2 < _EPS_NORM:
            raise ValueError(f"cannot normalize quaternion with squared norm {n2}")
        n = math.sqrt(n2)
        w, x, y, z = self.w / n, self.x / n, self.y / n, self.z / n
        if w < 0.0 or (w == 0.0 and _first_nonzero_negative(x, y, z)):
            w, x, y, z = -w, -x, -y, -z
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    # --- constructors ------------------------------------------------------

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis: Sequence[float], angle_rad: float) -> "UnitQuaternion":
        ax, ay, az = float(axis[0]), float(axis[1]), float(axis[2])
        n = math.sqrt(ax * ax + ay * ay + az * az)
        if n < _EPS_NORM:
            raise ValueError("rotation axis must be nonzero")
        half = 0.5 * angle_rad
        s = math.sin(half) / n
        return cls(math.cos(half), ax * s, ay * s, az * s)

    @classmethod
    def from_rotation_matrix(cls, r: Sequence[Sequence[float]]) -> "UnitQuaternion":
        """Shepperd's method; `r` is a row-major 3x3 rotation matrix."""
        m00, m01, m02 = r[0]
        m10, m11, m12 = r[1]
        m20, m21, m22 = r[2]
        tr = m00 + m11 + m22
        if tr > 0.0:
            s = 0.5 / math.sqrt(tr + 1.0)
            return cls(0.25 / s, (m21 - m12) * s, (m02 - m20) * s, (m10 - m01) * s)
        if m00 > m11 and m00 > m22:
            s = 2.0 * math.sqrt(1.0 + m00 - m11 - m22)
            return cls((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s)
        if m11 > m22:
            s = 2.0 * math.sqrt(1.0 + m11 - m00 - m22)
            return cls((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s)
        s = 2.0 * math.sqrt(1.0 + m22 - m00 - m11)
        return cls((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s)

    # --- algebra -------------------------------------------------------------

    def __mul__(self, other: "UnitQuaternion") -> "UnitQuaternion":
        """Hamilton product self ⊗ other (apply `other` first, then self)."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "UnitQuaternion":
        return UnitQuaternion(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: Sequence[float]) -> Vec3:
        """Rotate a 3-vector: ``v_world = q.rotate(v_body)``."""
        vx, vy, vz = float(v[0]), float(v[1]), float(v[2])
        qx, qy, qz, qw = self.x, self.y, self.z, self.w
        # t = 2 q_vec × v ; v' = v + w t + q_vec × t
        tx = 2.0 * (qy * vz - qz * vy)
        ty = 2.0 * (qz * vx - qx * vz)
        tz = 2.0 * (qx * vy - qy * vx)
        return (
            vx + qw * tx + qy * tz - qz * ty,
            vy + qw * ty + qz * tx - qx * tz,
            vz + qw * tz + qx * ty - qy * tx,
        )

    def to_rotation_matrix(self) -> tuple[tuple[float, float, float], ...]:
        w, x, y, z = self.w, self.x, self.y, self.z
        return (
            (1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)),
            (2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)),
            (2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)),
        )

    def angle_deg(self) -> float:
        """Geodesic rotation angle from identity, in [0, 180] degrees."""
        vec = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        return math.degrees(2.0 * math.atan2(vec, abs(self.w)))

    def angle_to(self, other: "UnitQuaternion") -> float:
        """Geodesic angle between two orientations, degrees."""
        return (self * other.conjugate()).angle_deg()

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)

    def norm(self) -> float:
        return math.sqrt(
            self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
        )


def _first_nonzero_negative(x: float, y: float, z: float) -> bool:
    for c in (x, y, z):
        if c != 0.0:
            return c < 0.0
    return False


def exp_map(omega: Sequence[float], dt: float) -> UnitQuaternion:
    """Rotation increment of a constant angular rate `omega` [rad/s] over `dt` [s].

    Zero rate maps to the identity; the small-angle branch keeps the map
    smooth down to machine precision.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    wx, wy, wz = float(omega[0]), float(omega[1]), float(omega[2])
    rate = math.sqrt(wx * wx + wy * wy + wz * wz)
    angle = rate * dt
    if angle < 1e-12:
        # first-order: q ≈ (1, ω dt / 2); normalized on construction
        h = 0.5 * dt
        return UnitQuaternion(1.0, wx * h, wy * h, wz * h)
    half = 0.5 * angle
    s = math.sin(half) / rate
    return UnitQuaternion(math.cos(half), wx * s, wy * s, wz * s)


def slerp(qa: UnitQuaternion, qb: UnitQuaternion, u: float) -> UnitQuaternion:
    """Spherical linear interpolation along the shorter arc, u in [0, 1]."""
    wa, xa, ya, za = qa.as_tuple()
    wb, xb, yb, zb = qb.as_tuple()
    dot = wa * wb + xa * xb + ya * yb + za * zb
    if dot < 0.0:
        wb, xb, yb, zb, dot = -wb, -xb, -yb, -zb, -dot
    if dot > 1.0 - 1e-12:
        # nearly parallel: linear blend, normalized on construction
        return UnitQuaternion(
            wa + u * (wb - wa), xa + u * (xb - xa), ya + u * (yb - ya), za + u * (zb - za)
        )
    theta = math.acos(_clamp(dot))
    s = math.sin(theta)
    ka = math.sin((1.0 - u) * theta) / s
    kb = math.sin(u * theta) / s
    return UnitQuaternion(
        ka * wa + kb * wb, ka * xa + kb * xb, ka * ya + kb * yb, ka * za + kb * zb
    )


def mean_orientation(quats: Iterable[UnitQuaternion]) -> UnitQuaternion:
    """Chordal mean of a cluster of orientations.

    Components are sign-aligned to the first element and averaged, then
    renormalized. Adequate for tightly clustered inputs (static poses);
    not a general rotation average.
    """
    it = iter(quats)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("mean_orientation of empty sequence") from None
    sw, sx, sy, sz = first.as_tuple()
    for q in it:
        w, x, y, z = q.as_tuple()
        if sw * w + sx * x + sy * y + sz * z < 0.0:
            w, x, y, z = -w, -x, -y, -z
        sw += w
        sx += x
        sy += y
        sz += z
    return UnitQuaternion(sw, sx, sy, sz)


@dataclass(frozen=True, slots=True)
class EulerAngles:
    """Decomposed intrinsic Euler angles in degrees.

    ``degenerate`` marks results inside the gimbal band where ``a1`` was
    forced to zero and ``a3`` absorbs the full residual rotation.
    """

    a1: float
    a2: float
    a3: float
    sequence: str
    degenerate: bool = False

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a1, self.a2, self.a3)


def decompose_euler(q: UnitQuaternion, sequence: str) -> EulerAngles:
    """Decompose a rotation into intrinsic YXY or YXZ angles (degrees).

    YXY: a2 in [0, 180]. YXZ: a2 in [-90, 90]. Within ``GIMBAL_BAND_DEG``
    of the singular configuration the split between a1 and a3 is not
    observable; a1 is set to 0 and the result is flagged, never an error.
    """
    w, x, y, z = q.as_tuple()
    r00 = 1 - 2 * (y * y + z * z)
    r01 = 2 * (x * y - w * z)
    r02 = 2 * (x * z + w * y)
    r10 = 2 * (x * y + w * z)
    r11 = 1 - 2 * (x * x + z * z)
    r12 = 2 * (y * z - w * x)
    r21 = 2 * (y * z + w * x)
    r22 = 1 - 2 * (x * x + y * y)

    if sequence == "YXY":
        a2 = math.degrees(math.acos(_clamp(r11)))
        if a2 < GIMBAL_BAND_DEG or a2 > 180.0 - GIMBAL_BAND_DEG:
            return EulerAngles(
                0.0, a2, math.degrees(math.atan2(r02, r00)), "YXY", degenerate=True
            )
        a1 = math.degrees(math.atan2(r01, r21))
        a3 = math.degrees(math.atan2(r10, -r12))
        return EulerAngles(a1, a2, a3, "YXY")

    if sequence == "YXZ":
        a2 = math.degrees(math.asin(_clamp(-r12)))
        if abs(a2) > 90.0 - GIMBAL_BAND_DEG:
            return EulerAngles(
                0.0, a2, math.degrees(math.atan2(-r01, r00)), "YXZ", degenerate=True
            )
        a1 = math.degrees(math.atan2(r02, r22))
        a3 = math.degrees(math.atan2(r10, r11))
        return EulerAngles(a1, a2, a3, "YXZ")

    raise ValueError(f"unknown Euler sequence {sequence!r}")


_AXES = {"X": (1.0, 0.0, 0.0), "Y": (0.0, 1.0, 0.0), "Z": (0.0, 0.0, 1.0)}


def compose_euler(a1: float, a2: float, a3: float, sequence: str) -> UnitQuaternion:
    """Rebuild the rotation from intrinsic Euler angles in degrees."""
    if sequence not in ("YXY", "YXZ"):
        raise ValueError(f"unknown Euler sequence {sequence!r}")
    q = UnitQuaternion.from_axis_angle(_AXES[sequence[0]], math.radians(a1))
    q = q * UnitQuaternion.from_axis_angle(_AXES[sequence[1]], math.radians(a2))
    q = q * UnitQuaternion.from_axis_angle(_AXES[sequence[2]], math.radians(a3))
    return q
