"""Forward-kinematics session synthesis and the round-trip harness.

Ground truth first: raised-cosine humeral repetitions in the task plane
(abduction about the anterior axis, elevation about the mediolateral
axis), scapular upward rotation as a share of humeral elevation shifted
by the rhythm lag, thorax stationary, and a leading upright calibration
hold. The IMU streams a rigidly mounted sensor would record are then
derived from those orientations exactly: gyroscope rates by central
quaternion finite differences, accelerometer as rotated gravity (limb
linear acceleration omitted; the motions are slow and the fusion gate
suppresses what little there is), magnetometer as the rotated horizontal
reference. Sensor noise comes from a seeded splitmix64 stream, so
fixtures are reproducible bit for bit anywhere.

The ground truth carries two kinds of event times:

* analytic: waveform-defined movement starts, 95% crossings and ranges;
* reference parameters: the session scalars obtained by running the
  production extraction on the noise-free truth angle series.

The round-trip report compares the full pipeline (synthesize, write,
read, fuse, calibrate, decompose, segment, extract) against the
reference parameters, so it measures pipeline degradation rather than
the documented operationalization latency of the onset detector, which
both sides share.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .anatomy import Joint, JointAngleSeries, SensorSite
from .errors import InvalidProfile, ValidationError
from .fusion import GRAVITY, ImuStream, OrientationSeries
from .geom import UnitQuaternion, decompose_euler
from .params import SessionParameters, extract_from_angles, extract_session
from .sessionio import (
    AnalysisConfig,
    SessionManifest,
    TaskKind,
    TaskWindow,
    _reject_unknown,
    read_session,
    write_session,
)

PROFILE_SCHEMA = "motion-profile/1"
SESSION_PROFILE_SCHEMA = "motion-session/1"
GENERATOR_ID = "splitmix64"

#: fraction of the repetition period at which a raised cosine first
#: reaches 95% of its peak
F95 = math.acos(1.0 - 2.0 * 0.95) / (2.0 * math.pi)

_X = (1.0, 0.0, 0.0)
_Y = (0.0, 1.0, 0.0)
_Z = (0.0, 0.0, 1.0)

_SITE_ORDER = (SensorSite.THORAX, SensorSite.SCAPULA, SensorSite.HUMERUS, SensorSite.FOREARM)


class SplitMix64:
    """Portable 64-bit-state generator (splitmix64)."""

    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self.MASK
        self._spare_gauss: float | None = None

    def next_raw(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self.MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self.MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self.MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in (0, 1]."""
        return ((self.next_raw() >> 11) + 1) * 2.0 ** -53

    def gauss(self) -> float:
        if self._spare_gauss is not None:
            z = self._spare_gauss
            self._spare_gauss = None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare_gauss = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def gauss3(self, sigma: float) -> tuple[float, float, float]:
        return (sigma * self.gauss(), sigma * self.gauss(), sigma * self.gauss())


@dataclass(frozen=True)
class NoiseSpec:
    """Per-sensor noise magnitudes; all zero means an ideal sensor."""

    accel_sigma: float = 0.0  # m/s^2
    gyro_sigma: float = 0.0  # rad/s
    mag_sigma: float = 0.0  # unitless
    gyro_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)  # rad/s

    @classmethod
    def none(cls) -> "NoiseSpec":
        return cls()

    @classmethod
    def nominal(cls) -> "NoiseSpec":
        """Documented sensor noise floor, bias-free."""
        return cls(accel_sigma=0.05, gyro_sigma=0.005, mag_sigma=0.005)

    @classmethod
    def nominal_biased(cls) -> "NoiseSpec":
        """Nominal noise plus a 0.002 rad/s gyro bias on every axis."""
        return cls(
            accel_sigma=0.05,
            gyro_sigma=0.005,
            mag_sigma=0.005,
            gyro_bias=(0.002, 0.002, 0.002),
        )

    @property
    def silent(self) -> bool:
        return (
            self.accel_sigma == 0.0
            and self.gyro_sigma == 0.0
            and self.mag_sigma == 0.0
            and self.gyro_bias == (0.0, 0.0, 0.0)
        )


def default_mounting() -> dict[SensorSite, UnitQuaternion]:
    """Representative sensor-mounting misalignments per site."""
    return {
        SensorSite.THORAX: UnitQuaternion.from_axis_angle(_Z, math.radians(6.0)),
        SensorSite.SCAPULA: UnitQuaternion.from_axis_angle(_Y, math.radians(10.0))
        * UnitQuaternion.from_axis_angle(_X, math.radians(4.0)),
        SensorSite.HUMERUS: UnitQuaternion.from_axis_angle(_Y, math.radians(18.0)),
        SensorSite.FOREARM: UnitQuaternion.from_axis_angle(_Z, math.radians(-8.0)),
    }


@dataclass(frozen=True)
class MotionProfile:
    """One task block of synthetic shoulder motion."""

    task: TaskKind = TaskKind.ABDUCTION
    n_reps: int = 5
    rep_period: float = 3.0  # s
    rep_gap: float = 1.0  # s of rest before each repetition
    peak_deg: float = 120.0
    scapula_share: float = 1.0 / 3.0
    scapula_lag: float = -0.3  # s; negative = scapula early
    mounting: Mapping[SensorSite, UnitQuaternion] = field(default_factory=default_mounting)
    noise: NoiseSpec = NoiseSpec()
    sample_rate: float = 100.0  # Hz
    calibration_hold: float = 3.0  # s
    seed: int = 1
    include_forearm: bool = False

    def __post_init__(self):
        if not 0.0 < self.peak_deg < 180.0:
            raise InvalidProfile(f"peak {self.peak_deg} deg outside (0, 180)")
        if self.n_reps < 1:
            raise InvalidProfile("need at least one repetition")
        if self.rep_period <= 0 or self.sample_rate <= 0:
            raise InvalidProfile("repetition period and sample rate must be positive")
        if self.scapula_share < 0:
            raise InvalidProfile("scapula share cannot be negative")
        if self.rep_gap <= abs(self.scapula_lag):
            raise InvalidProfile(
                f"repetition gap {self.rep_gap} s must exceed the scapula lag "
                f"magnitude {abs(self.scapula_lag)} s"
            )
        if self.calibration_hold < 2.0:
            raise InvalidProfile(
                "calibration hold must be at least 2 s (still-window init plus "
                "a 1 s calibration window)"
            )

    def block_duration(self) -> float:
        return self.rep_gap + self.n_reps * (self.rep_period + self.rep_gap)

    def to_dict(self) -> dict:
        return {
            "schema": PROFILE_SCHEMA,
            "generator": GENERATOR_ID,
            "task": self.task.value,
            "n_reps": self.n_reps,
            "rep_period": self.rep_period,
            "rep_gap": self.rep_gap,
            "peak_deg": self.peak_deg,
            "scapula_share": self.scapula_share,
            "scapula_lag": self.scapula_lag,
            "sample_rate": self.sample_rate,
            "calibration_hold": self.calibration_hold,
            "seed": self.seed,
            "include_forearm": self.include_forearm,
            "noise": {
                "accel_sigma": self.noise.accel_sigma,
                "gyro_sigma": self.noise.gyro_sigma,
                "mag_sigma": self.noise.mag_sigma,
                "gyro_bias": list(self.noise.gyro_bias),
            },
            "mounting": {
                site.value: list(q.as_tuple()) for site, q in self.mounting.items()
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MotionProfile":
        _reject_unknown(
            d,
            (
                "schema",
                "generator",
                "task",
                "n_reps",
                "rep_period",
                "rep_gap",
                "peak_deg",
                "scapula_share",
                "scapula_lag",
                "sample_rate",
                "calibration_hold",
                "seed",
                "include_forearm",
                "noise",
                "mounting",
            ),
            "motion profile",
        )
        if d.get("schema") != PROFILE_SCHEMA:
            raise ValidationError(f"unsupported profile schema {d.get('schema')!r}")
        if d.get("generator", GENERATOR_ID) != GENERATOR_ID:
            raise ValidationError(
                f"profile requires generator {d.get('generator')!r}; this build "
                f"provides {GENERATOR_ID!r}"
            )
        base = cls()
        noise_d = d.get("noise", {})
        _reject_unknown(
            noise_d, ("accel_sigma", "gyro_sigma", "mag_sigma", "gyro_bias"), "profile noise"
        )
        bias = noise_d.get("gyro_bias", (0.0, 0.0, 0.0))
        noise = NoiseSpec(
            accel_sigma=float(noise_d.get("accel_sigma", 0.0)),
            gyro_sigma=float(noise_d.get("gyro_sigma", 0.0)),
            mag_sigma=float(noise_d.get("mag_sigma", 0.0)),
            gyro_bias=(float(bias[0]), float(bias[1]), float(bias[2])),
        )
        mounting = default_mounting()
        for site_name, q in d.get("mounting", {}).items():
            mounting[SensorSite(site_name)] = UnitQuaternion(*(float(c) for c in q))
        return cls(
            task=TaskKind(d.get("task", base.task.value)),
            n_reps=int(d.get("n_reps", base.n_reps)),
            rep_period=float(d.get("rep_period", base.rep_period)),
            rep_gap=float(d.get("rep_gap", base.rep_gap)),
            peak_deg=float(d.get("peak_deg", base.peak_deg)),
            scapula_share=float(d.get("scapula_share", base.scapula_share)),
            scapula_lag=float(d.get("scapula_lag", base.scapula_lag)),
            mounting=mounting,
            noise=noise,
            sample_rate=float(d.get("sample_rate", base.sample_rate)),
            calibration_hold=float(d.get("calibration_hold", base.calibration_hold)),
            seed=int(d.get("seed", base.seed)),
            include_forearm=bool(d.get("include_forearm", base.include_forearm)),
        )


@dataclass(frozen=True)
class TrueRepetition:
    """Analytic (waveform-defined) event times of one repetition."""

    task: str
    index: int
    t_start: float
    t_peak: float
    t_end: float
    rom_humerus: float
    rom_scapula: float
    onset_humerus: float
    attain_humerus: float
    onset_scapula: float
    attain_scapula: float

    @property
    def activation_humerus(self) -> float:
        return self.attain_humerus - self.onset_humerus

    @property
    def activation_scapula(self) -> float:
        return self.attain_scapula - self.onset_scapula

    @property
    def onset_lead_scapula(self) -> float:
        return self.onset_humerus - self.onset_scapula


@dataclass(eq=False)
class GroundTruth:
    """Internally consistent truth: one set of orientations feeds both the
    IMU synthesizer and the truth angle series."""

    profiles: tuple[MotionProfile, ...]
    manifest: SessionManifest
    t: np.ndarray
    segment_orientations: dict[SensorSite, OrientationSeries]
    joint_series: dict[Joint, JointAngleSeries]
    true_repetitions: tuple[TrueRepetition, ...]

    def reference_parameters(self, config: AnalysisConfig) -> SessionParameters:
        """Session scalars from the production extraction run on the truth
        angle series (the pipeline's own definitions on perfect data)."""
        return extract_from_angles(
            self.joint_series,
            manifest_subject=self.manifest.subject,
            group=self.manifest.group,
            timepoint=self.manifest.timepoint,
            side=self.manifest.side,
            tasks=[(w.kind, w.t_start, w.t_end) for w in self.manifest.tasks],
            config=config,
        )


def _rep_wave(tau: float, period: float, peak: float) -> float:
    if tau <= 0.0 or tau >= period:
        return 0.0
    return 0.5 * peak * (1.0 - math.cos(2.0 * math.pi * tau / period))


def _profiles_tuple(profiles) -> tuple[MotionProfile, ...]:
    if isinstance(profiles, MotionProfile):
        return (profiles,)
    out = tuple(profiles)
    if not out:
        raise InvalidProfile("no motion profile given")
    rate = out[0].sample_rate
    for p in out[1:]:
        if p.sample_rate != rate:
            raise InvalidProfile("all blocks of a session must share one sample rate")
    return out


def generate_truth(
    profiles: MotionProfile | Sequence[MotionProfile],
    subject: str = "synthetic",
    group: str = "HC",
    timepoint: str | None = None,
    side: str = "right",
) -> GroundTruth:
    """Ground-truth orientations, angle series and events for a session.

    Several profiles form consecutive task blocks sharing one calibration
    hold (taken from the first profile).
    """
    profs = _profiles_tuple(profiles)
    first = profs[0]
    rate = first.sample_rate
    hold = first.calibration_hold

    blocks = []  # (profile, block_start)
    cursor = hold
    for p in profs:
        blocks.append((p, cursor))
        cursor += p.block_duration()
    duration = cursor
    n = int(round(duration * rate)) + 1
    t = np.arange(n) / rate

    def humeral_angles(ti: float) -> tuple[float, float]:
        """(elevation-task angle, abduction-task angle) at time ti."""
        elev = abd = 0.0
        for p, start in blocks:
            for k in range(p.n_reps):
                rep_start = start + p.rep_gap + k * (p.rep_period + p.rep_gap)
                w = _rep_wave(ti - rep_start, p.rep_period, p.peak_deg)
                if w != 0.0:
                    if p.task == TaskKind.ELEVATION:
                        elev += w
                    else:
                        abd += w
        return elev, abd

    def scapular_angle(ti: float) -> float:
        v = 0.0
        for p, start in blocks:
            for k in range(p.n_reps):
                rep_start = start + p.rep_gap + k * (p.rep_period + p.rep_gap)
                v += p.scapula_share * _rep_wave(
                    (ti - p.scapula_lag) - rep_start, p.rep_period, p.peak_deg
                )
        return v

    include_forearm = any(p.include_forearm for p in profs)
    elbow = UnitQuaternion.from_axis_angle(_Z, math.radians(90.0))

    sites = [SensorSite.THORAX, SensorSite.SCAPULA, SensorSite.HUMERUS]
    if include_forearm:
        sites.append(SensorSite.FOREARM)
    quats = {site: np.empty((n, 4)) for site in sites}

    ht = {k: np.empty(n) for k in ("a1", "a2", "a3")}
    st = {k: np.empty(n) for k in ("a1", "a2", "a3")}
    ht_deg = np.empty(n, dtype=bool)
    st_deg = np.empty(n, dtype=bool)

    identity = UnitQuaternion.identity()
    for i, ti in enumerate(t):
        elev, abd = humeral_angles(float(ti))
        ups = scapular_angle(float(ti))
        q_h = identity
        if elev != 0.0:
            q_h = UnitQuaternion.from_axis_angle(_Z, math.radians(elev))
        if abd != 0.0:
            q_h = q_h * UnitQuaternion.from_axis_angle(_X, math.radians(abd))
        q_s = (
            UnitQuaternion.from_axis_angle(_X, math.radians(ups))
            if ups != 0.0
            else identity
        )
        quats[SensorSite.THORAX][i] = identity.as_tuple()
        quats[SensorSite.SCAPULA][i] = q_s.as_tuple()
        quats[SensorSite.HUMERUS][i] = q_h.as_tuple()
        if include_forearm:
            quats[SensorSite.FOREARM][i] = (q_h * elbow).as_tuple()
        e_ht = decompose_euler(q_h, "YXY")
        ht["a1"][i], ht["a2"][i], ht["a3"][i] = e_ht.a1, e_ht.a2, e_ht.a3
        ht_deg[i] = e_ht.degenerate
        e_st = decompose_euler(q_s, "YXZ")
        st["a1"][i], st["a2"][i], st["a3"][i] = e_st.a1, e_st.a2, e_st.a3
        st_deg[i] = e_st.degenerate

    segment_orientations = {
        site: OrientationSeries(site=site.value, t=t.copy(), quats=quats[site])
        for site in sites
    }
    joint_series = {
        Joint.HUMEROTHORACIC: JointAngleSeries(
            joint=Joint.HUMEROTHORACIC,
            sequence="YXY",
            t=t.copy(),
            a1=ht["a1"],
            a2=ht["a2"],
            a3=ht["a3"],
            degenerate=ht_deg,
        ),
        Joint.SCAPULOTHORACIC: JointAngleSeries(
            joint=Joint.SCAPULOTHORACIC,
            sequence="YXZ",
            t=t.copy(),
            a1=st["a1"],
            a2=st["a2"],
            a3=st["a3"],
            degenerate=st_deg,
        ),
    }
    if include_forearm:
        # rigid elbow: the forearm-thoracic elevation equals the humeral one
        joint_series[Joint.FOREARM_THORACIC] = JointAngleSeries(
            joint=Joint.FOREARM_THORACIC,
            sequence="YXY",
            t=t.copy(),
            a1=ht["a1"].copy(),
            a2=ht["a2"].copy(),
            a3=ht["a3"].copy(),
            degenerate=ht_deg.copy(),
        )

    reps = []
    for p, start in blocks:
        for k in range(p.n_reps):
            rep_start = start + p.rep_gap + k * (p.rep_period + p.rep_gap)
            reps.append(
                TrueRepetition(
                    task=p.task.value,
                    index=k,
                    t_start=rep_start,
                    t_peak=rep_start + p.rep_period / 2.0,
                    t_end=rep_start + p.rep_period,
                    rom_humerus=p.peak_deg,
                    rom_scapula=p.scapula_share * p.peak_deg,
                    onset_humerus=rep_start,
                    attain_humerus=rep_start + F95 * p.rep_period,
                    onset_scapula=rep_start + p.scapula_lag,
                    attain_scapula=rep_start + p.scapula_lag + F95 * p.rep_period,
                )
            )

    stream_files = {site: f"{site.value}.csv" for site in sites}
    manifest = SessionManifest(
        subject=subject,
        group=group,
        timepoint=timepoint,
        side=side,
        calibration=(0.6, hold - 0.2),
        tasks=tuple(
            TaskWindow(kind=p.task, t_start=start, t_end=start + p.block_duration())
            for p, start in blocks
        ),
        streams=stream_files,
        sample_rate_hint=rate,
    )
    return GroundTruth(
        profiles=profs,
        manifest=manifest,
        t=t,
        segment_orientations=segment_orientations,
        joint_series=joint_series,
        true_repetitions=tuple(reps),
    )


def _body_rates(t: np.ndarray, quats: Sequence[UnitQuaternion]) -> np.ndarray:
    """Body-frame angular velocity by central quaternion differences."""
    n = len(quats)
    out = np.empty((n, 3))

    def log_rate(qa: UnitQuaternion, qb: UnitQuaternion, dt: float):
        rel = qa.conjugate() * qb
        vec = math.sqrt(rel.x ** 2 + rel.y ** 2 + rel.z ** 2)
        if vec < 1e-15:
            return (0.0, 0.0, 0.0)
        angle = 2.0 * math.atan2(vec, rel.w)
        k = angle / (vec * dt)
        return (rel.x * k, rel.y * k, rel.z * k)

    for i in range(n):
        if i == 0:
            out[i] = log_rate(quats[0], quats[1], float(t[1] - t[0]))
        elif i == n - 1:
            out[i] = log_rate(quats[-2], quats[-1], float(t[-1] - t[-2]))
        else:
            out[i] = log_rate(quats[i - 1], quats[i + 1], float(t[i + 1] - t[i - 1]))
    return out


def synthesize_imu(truth: GroundTruth, profile: MotionProfile | None = None) -> dict[SensorSite, ImuStream]:
    """The 9-axis streams rigidly mounted sensors would record.

    Deterministic for a fixed profile seed; with all noise magnitudes zero
    the seed has no effect at all.
    """
    p = profile if profile is not None else truth.profiles[0]
    noise = p.noise
    t = truth.t
    seeder = SplitMix64(p.seed)
    site_seeds = {site: seeder.next_raw() for site in _SITE_ORDER}

    streams: dict[SensorSite, ImuStream] = {}
    for site, series in truth.segment_orientations.items():
        mount = p.mounting.get(site, UnitQuaternion.identity())
        sensor_quats = [series.quat_at(i) * mount for i in range(len(series))]
        gyro = _body_rates(t, sensor_quats)
        n = len(sensor_quats)
        accel = np.empty((n, 3))
        mag = np.empty((n, 3))
        for i, q in enumerate(sensor_quats):
            qc = q.conjugate()
            accel[i] = qc.rotate((0.0, GRAVITY, 0.0))
            mag[i] = qc.rotate((1.0, 0.0, 0.0))
        gyro = gyro + np.asarray(noise.gyro_bias)
        if not noise.silent:
            rng = SplitMix64(site_seeds[site])
            if noise.accel_sigma > 0.0:
                for i in range(n):
                    accel[i] += rng.gauss3(noise.accel_sigma)
            if noise.gyro_sigma > 0.0:
                for i in range(n):
                    gyro[i] += rng.gauss3(noise.gyro_sigma)
            if noise.mag_sigma > 0.0:
                for i in range(n):
                    mag[i] += rng.gauss3(noise.mag_sigma)
        streams[site] = ImuStream(site=site.value, t=t.copy(), accel=accel, gyro=gyro, mag=mag)
    return streams


def write_synthetic_session(
    profiles: MotionProfile | Sequence[MotionProfile],
    directory: Path,
    subject: str = "synthetic",
    group: str = "HC",
    timepoint: str | None = None,
) -> GroundTruth:
    """Generate and write a synthetic session; returns its ground truth."""
    truth = generate_truth(profiles, subject=subject, group=group, timepoint=timepoint)
    streams = synthesize_imu(truth)
    write_session(streams, truth.manifest, directory)
    return truth


# --- round-trip harness --------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    """Absolute error bounds for the round-trip comparison."""

    rom_deg: float = 1.0
    onset_lead_s: float = 0.05
    activation_s: float = 0.1

    @classmethod
    def for_noise(cls, noise: NoiseSpec) -> "Tolerances":
        if noise.silent:
            return cls()
        return cls(rom_deg=5.0, onset_lead_s=0.1, activation_s=0.25)


@dataclass(frozen=True)
class RoundTripRow:
    parameter: str
    unit: str
    analytic: float | None
    reference: float | None
    measured: float | None
    error: float | None
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class RoundTripReport:
    rows: tuple[RoundTripRow, ...]
    passed: bool
    n_repetitions_expected: int
    n_repetitions_measured: int

    def failures(self) -> list[RoundTripRow]:
        return [r for r in self.rows if not r.passed]


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def round_trip_report(
    profiles: MotionProfile | Sequence[MotionProfile],
    config: AnalysisConfig | None = None,
    tolerances: Tolerances | None = None,
    workdir: Path | None = None,
) -> RoundTripReport:
    """Synthesize, persist, re-read and analyze a session; compare against
    the truth-derived reference parameters."""
    profs = _profiles_tuple(profiles)
    config = config or AnalysisConfig()
    tolerances = tolerances or Tolerances.for_noise(profs[0].noise)

    truth = generate_truth(profs)
    streams = synthesize_imu(truth)

    if workdir is None:
        with tempfile.TemporaryDirectory(prefix="shoulderkin-roundtrip-") as tmp:
            write_session(streams, truth.manifest, Path(tmp))
            session = read_session(Path(tmp))
            measured = extract_session(session, config)
    else:
        write_session(streams, truth.manifest, Path(workdir))
        session = read_session(Path(workdir))
        measured = extract_session(session, config)

    reference = truth.reference_parameters(config)

    abd = [r for r in truth.true_repetitions if r.task == TaskKind.ABDUCTION.value]
    elev = [r for r in truth.true_repetitions if r.task == TaskKind.ELEVATION.value]
    analytic = {
        "rom_elevation": _mean_or_none([r.rom_humerus for r in elev]),
        "rom_abduction": _mean_or_none([r.rom_humerus for r in abd]),
        "rom_scapula": _mean_or_none([r.rom_scapula for r in abd]),
        "activation_scapula": _mean_or_none([r.activation_scapula for r in abd]),
        "activation_humerus": _mean_or_none([r.activation_humerus for r in abd]),
        "onset_lead_scapula": _mean_or_none([r.onset_lead_scapula for r in abd]),
    }
    row_defs = (
        ("rom_elevation", "deg", tolerances.rom_deg),
        ("rom_abduction", "deg", tolerances.rom_deg),
        ("rom_scapula", "deg", tolerances.rom_deg),
        ("activation_scapula", "s", tolerances.activation_s),
        ("activation_humerus", "s", tolerances.activation_s),
        ("onset_lead_scapula", "s", tolerances.onset_lead_s),
    )
    rows = []
    for parameter, unit, tol in row_defs:
        ref = getattr(reference, parameter)
        got = getattr(measured, parameter)
        if ref is None and got is None:
            continue
        if ref is None or got is None:
            rows.append(
                RoundTripRow(parameter, unit, analytic.get(parameter), ref, got, None, tol, False)
            )
            continue
        err = abs(got - ref)
        rows.append(
            RoundTripRow(
                parameter, unit, analytic.get(parameter), ref, got, err, tol, err < tol
            )
        )
    n_expected = sum(p.n_reps for p in profs)
    n_measured = sum(measured.n_repetitions.values())
    rep_ok = n_expected == n_measured
    return RoundTripReport(
        rows=tuple(rows),
        passed=rep_ok and all(r.passed for r in rows),
        n_repetitions_expected=n_expected,
        n_repetitions_measured=n_measured,
    )
