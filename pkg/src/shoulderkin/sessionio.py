"""Session file formats: sensor stream CSVs, manifests, analysis config.

A recorded session is a directory holding one CSV per sensor plus a
``manifest.json``. The stream format is pinned so fixtures stay portable:

* header exactly ``t,ax,ay,az,gx,gy,gz,mx,my,mz``
* SI units (s, m/s^2, rad/s; magnetometer unitless), ``.`` decimal point,
  comma separator, LF line endings
* numbers serialized with 9 significant digits, so write -> read -> write
  is byte-stable

Manifests and the analysis configuration are JSON documents with a
``schema`` version field; unknown keys are rejected everywhere.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .anatomy import SensorSite
from .errors import ParseError, SessionWriteError, ValidationError
from .fusion import FilterConfig, ImuStream

STREAM_HEADER = "t,ax,ay,az,gx,gy,gz,mx,my,mz"
MANIFEST_SCHEMA = "session-manifest/1"
CONFIG_SCHEMA = "analysis-config/1"
MANIFEST_NAME = "manifest.json"

GROUPS = ("AC", "HC")
TIMEPOINTS = ("T0", "T1")
SIDES = ("left", "right")


class TaskKind(str, Enum):
    ELEVATION = "elevation"
    ABDUCTION = "abduction"


@dataclass(frozen=True)
class TaskWindow:
    kind: TaskKind
    t_start: float
    t_end: float


@dataclass(frozen=True)
class SessionManifest:
    """Where everything is in a recorded session."""

    subject: str
    group: str
    timepoint: str | None
    side: str
    calibration: tuple[float, float]
    tasks: tuple[TaskWindow, ...]
    streams: Mapping[SensorSite, str]
    sample_rate_hint: float | None = None

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValidationError(f"unknown group {self.group!r}; expected one of {GROUPS}")
        if self.timepoint is not None and self.timepoint not in TIMEPOINTS:
            raise ValidationError(
                f"unknown timepoint {self.timepoint!r}; expected one of {TIMEPOINTS} or null"
            )
        if self.side not in SIDES:
            raise ValidationError(f"unknown side {self.side!r}; expected one of {SIDES}")
        if not self.streams:
            raise ValidationError("manifest maps no sensor sites to stream files")
        t0, t1 = self.calibration
        if not (math.isfinite(t0) and math.isfinite(t1) and t0 < t1):
            raise ValidationError(f"calibration window [{t0}, {t1}] is not a proper interval")
        windows = sorted(self.tasks, key=lambda w: w.t_start)
        for w in windows:
            if not w.t_start < w.t_end:
                raise ValidationError(
                    f"task {w.kind.value!r} window [{w.t_start}, {w.t_end}] is empty"
                )
            if w.t_start < t1:
                raise ValidationError(
                    f"calibration window must precede task {w.kind.value!r} "
                    f"(calibration ends {t1}, task starts {w.t_start})"
                )
        for a, b in zip(windows, windows[1:]):
            if b.t_start < a.t_end:
                raise ValidationError(
                    f"task windows overlap: {a.kind.value!r} ends {a.t_end}, "
                    f"{b.kind.value!r} starts {b.t_start}"
                )

    def session_id(self) -> str:
        return f"{self.group}-{self.timepoint}-{self.subject}" if self.timepoint else \
            f"{self.group}-{self.subject}"

    def task(self, kind: TaskKind) -> TaskWindow | None:
        for w in self.tasks:
            if w.kind == kind:
                return w
        return None


@dataclass(eq=False)
class SessionData:
    manifest: SessionManifest
    streams: Mapping[SensorSite, ImuStream]


# --- stream CSV -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_stream_csv(path: Path, stream: ImuStream) -> None:
    rows = [STREAM_HEADER]
    data = np.hstack([stream.t[:, None], stream.accel, stream.gyro, stream.mag])
    for row in data:
        rows.append(",".join(_fmt(float(v)) for v in row))
    Path(path).write_text("\n".join(rows) + "\n", encoding="ascii", newline="\n")


def read_stream_csv(path: Path, site: SensorSite) -> ImuStream:
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except FileNotFoundError:
        raise ParseError("stream file does not exist", path=str(path)) from None
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty stream file", path=str(path), line=1)
    if lines[0] != STREAM_HEADER:
        raise ParseError(
            f"bad header {lines[0]!r}; expected {STREAM_HEADER!r}", path=str(path), line=1
        )
    values = np.empty((len(lines) - 1, 10))
    prev_t = -math.inf
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 10:
            raise ParseError(
                f"expected 10 comma-separated fields, found {len(parts)}",
                path=str(path),
                line=i,
            )
        try:
            row = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", path=str(path), line=i) from None
        if any(not math.isfinite(v) for v in row):
            raise ValidationError(
                "non-finite sample value violates the finiteness invariant",
                path=str(path),
                line=i,
            )
        if row[0] <= prev_t:
            raise ValidationError(
                f"timestamp {row[0]!r} not strictly increasing", path=str(path), line=i
            )
        prev_t = row[0]
        values[i - 2] = row
    if values.shape[0] == 0:
        raise ValidationError("stream holds no samples", path=str(path), line=1)
    return ImuStream(
        site=site.value,
        t=values[:, 0],
        accel=values[:, 1:4],
        gyro=values[:, 4:7],
        mag=values[:, 7:10],
    )


# --- manifest -------------------------------------------------------------------------


def _reject_unknown(d: Mapping, allowed: Sequence[str], context: str) -> None:
    unknown = set(d) - set(allowed)
    if unknown:
        raise ValidationError(f"unknown key(s) in {context}: {', '.join(sorted(unknown))}")


def manifest_to_dict(m: SessionManifest) -> dict:
    return {
        "schema": MANIFEST_SCHEMA,
        "subject": m.subject,
        "group": m.group,
        "timepoint": m.timepoint,
        "side": m.side,
        "sample_rate_hint": m.sample_rate_hint,
        "calibration": [m.calibration[0], m.calibration[1]],
        "tasks": [
            {"kind": w.kind.value, "t_start": w.t_start, "t_end": w.t_end} for w in m.tasks
        ],
        "streams": {site.value: name for site, name in m.streams.items()},
    }


def manifest_from_dict(d: Mapping, path: str | None = None) -> SessionManifest:
    _reject_unknown(
        d,
        (
            "schema",
            "subject",
            "group",
            "timepoint",
            "side",
            "sample_rate_hint",
            "calibration",
            "tasks",
            "streams",
        ),
        "manifest",
    )
    if d.get("schema") != MANIFEST_SCHEMA:
        raise ValidationError(
            f"unsupported manifest schema {d.get('schema')!r}", path=path
        )
    tasks = []
    for tw in d.get("tasks", ()):
        _reject_unknown(tw, ("kind", "t_start", "t_end"), "task window")
        try:
            kind = TaskKind(tw["kind"])
        except ValueError:
            raise ValidationError(f"unknown task kind {tw.get('kind')!r}", path=path) from None
        tasks.append(TaskWindow(kind=kind, t_start=float(tw["t_start"]), t_end=float(tw["t_end"])))
    streams = {}
    for site_name, filename in d.get("streams", {}).items():
        try:
            site = SensorSite(site_name)
        except ValueError:
            raise ValidationError(f"unknown sensor site {site_name!r}", path=path) from None
        streams[site] = str(filename)
    cal = d.get("calibration", ())
    if len(cal) != 2:
        raise ValidationError("calibration must be a [t0, t1] pair", path=path)
    return SessionManifest(
        subject=str(d.get("subject", "")),
        group=str(d.get("group", "")),
        timepoint=d.get("timepoint"),
        side=str(d.get("side", "")),
        calibration=(float(cal[0]), float(cal[1])),
        tasks=tuple(tasks),
        streams=streams,
        sample_rate_hint=(
            float(d["sample_rate_hint"]) if d.get("sample_rate_hint") is not None else None
        ),
    )


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=True) + "\n"


def _load_json(path: Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError("file does not exist", path=str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path=str(path), line=exc.lineno) from None


# --- session directories ---------------------------------------------------------------


def read_session(directory: Path) -> SessionData:
    """Read and validate a session directory (manifest plus streams)."""
    directory = Path(directory)
    manifest = manifest_from_dict(
        _load_json(directory / MANIFEST_NAME), path=str(directory / MANIFEST_NAME)
    )
    streams: dict[SensorSite, ImuStream] = {}
    for site, filename in manifest.streams.items():
        streams[site] = read_stream_csv(directory / filename, site)
    for site, stream in streams.items():
        lo, hi = float(stream.t[0]), float(stream.t[-1])
        t0, t1 = manifest.calibration
        if t0 < lo or t1 > hi:
            raise ValidationError(
                f"calibration window [{t0}, {t1}] outside stream {site.value!r} "
                f"extent [{lo}, {hi}]"
            )
        for w in manifest.tasks:
            if w.t_start < lo or w.t_end > hi:
                raise ValidationError(
                    f"task {w.kind.value!r} window [{w.t_start}, {w.t_end}] outside "
                    f"stream {site.value!r} extent [{lo}, {hi}]"
                )
    return SessionData(manifest=manifest, streams=streams)


def write_session(
    streams: Mapping[SensorSite, ImuStream],
    manifest: SessionManifest,
    directory: Path,
) -> list[Path]:
    """Write a session directory; validates everything before any file I/O."""
    if not streams:
        raise SessionWriteError("refusing to write a session with no streams")
    missing = set(manifest.streams) - set(streams)
    if missing:
        raise SessionWriteError(
            "manifest names streams that were not provided: "
            + ", ".join(s.value for s in sorted(missing, key=lambda s: s.value))
        )
    for site, stream in streams.items():
        if site not in manifest.streams:
            raise SessionWriteError(f"stream {site.value!r} missing from the manifest map")
        if len(stream) == 0:
            raise SessionWriteError(f"stream {site.value!r} holds no samples")

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    manifest_path = directory / MANIFEST_NAME
    manifest_path.write_text(_dump_json(manifest_to_dict(manifest)), encoding="utf-8")
    written.append(manifest_path)
    for site, filename in manifest.streams.items():
        p = directory / filename
        write_stream_csv(p, streams[site])
        written.append(p)
    return written


# --- analysis configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class SegmentationSettings:
    """Thresholds for repetition and onset detection (ledger defaults)."""

    smooth_window: float = 0.25  # s
    min_peak_deg: float = 20.0
    peak_fraction: float = 0.5
    min_separation: float = 1.0  # s
    onset_speed: float = 5.0  # deg/s
    onset_hold: float = 0.1  # s


@dataclass(frozen=True)
class StatsSettings:
    sd_conventions: Mapping[str, str] = field(
        default_factory=lambda: {
            "rom_ac": "population",
            "rom_hc": "sample",
            "roms_ac": "sample",
            "act_ac": "sample",
        }
    )
    sidedness: str = "two"

    def __post_init__(self):
        if self.sidedness not in ("one", "two"):
            raise ValidationError(f"unknown sidedness {self.sidedness!r}")
        for table, conv in self.sd_conventions.items():
            if conv not in ("sample", "population"):
                raise ValidationError(f"unknown SD convention {conv!r} for table {table!r}")


@dataclass(frozen=True)
class AnalysisConfig:
    """All tunables of the analysis pipeline, versioned for provenance."""

    fusion: FilterConfig = FilterConfig()
    segmentation: SegmentationSettings = SegmentationSettings()
    rome_source: str = "humerus"
    stats: StatsSettings = field(default_factory=StatsSettings)

    def __post_init__(self):
        if self.rome_source not in ("humerus", "forearm"):
            raise ValidationError(f"unknown rome_source {self.rome_source!r}")

    def to_dict(self) -> dict:
        return {
            "schema": CONFIG_SCHEMA,
            "fusion": {
                "tau_accel": self.fusion.tau_accel,
                "tau_mag": self.fusion.tau_mag,
                "accel_gate": list(self.fusion.accel_gate),
                "still_window": self.fusion.still_window,
            },
            "segmentation": {
                "smooth_window": self.segmentation.smooth_window,
                "min_peak_deg": self.segmentation.min_peak_deg,
                "peak_fraction": self.segmentation.peak_fraction,
                "min_separation": self.segmentation.min_separation,
                "onset_speed": self.segmentation.onset_speed,
                "onset_hold": self.segmentation.onset_hold,
            },
            "extraction": {"rome_source": self.rome_source},
            "stats": {
                "sd_conventions": dict(self.stats.sd_conventions),
                "sidedness": self.stats.sidedness,
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping, path: str | None = None) -> "AnalysisConfig":
        _reject_unknown(
            d, ("schema", "fusion", "segmentation", "extraction", "stats"), "config"
        )
        if d.get("schema") != CONFIG_SCHEMA:
            raise ValidationError(f"unsupported config schema {d.get('schema')!r}", path=path)
        fusion_d = d.get("fusion", {})
        _reject_unknown(
            fusion_d, ("tau_accel", "tau_mag", "accel_gate", "still_window"), "config.fusion"
        )
        base_f = FilterConfig()
        gate = fusion_d.get("accel_gate", list(base_f.accel_gate))
        fusion = FilterConfig(
            tau_accel=float(fusion_d.get("tau_accel", base_f.tau_accel)),
            tau_mag=float(fusion_d.get("tau_mag", base_f.tau_mag)),
            accel_gate=(float(gate[0]), float(gate[1])),
            still_window=float(fusion_d.get("still_window", base_f.still_window)),
        )
        seg_d = d.get("segmentation", {})
        _reject_unknown(
            seg_d,
            (
                "smooth_window",
                "min_peak_deg",
                "peak_fraction",
                "min_separation",
                "onset_speed",
                "onset_hold",
            ),
            "config.segmentation",
        )
        base_s = SegmentationSettings()
        segmentation = SegmentationSettings(
            smooth_window=float(seg_d.get("smooth_window", base_s.smooth_window)),
            min_peak_deg=float(seg_d.get("min_peak_deg", base_s.min_peak_deg)),
            peak_fraction=float(seg_d.get("peak_fraction", base_s.peak_fraction)),
            min_separation=float(seg_d.get("min_separation", base_s.min_separation)),
            onset_speed=float(seg_d.get("onset_speed", base_s.onset_speed)),
            onset_hold=float(seg_d.get("onset_hold", base_s.onset_hold)),
        )
        ext_d = d.get("extraction", {})
        _reject_unknown(ext_d, ("rome_source",), "config.extraction")
        stats_d = d.get("stats", {})
        _reject_unknown(stats_d, ("sd_conventions", "sidedness"), "config.stats")
        stats = StatsSettings(
            sd_conventions=dict(stats_d.get("sd_conventions", StatsSettings().sd_conventions)),
            sidedness=str(stats_d.get("sidedness", "two")),
        )
        return cls(
            fusion=fusion,
            segmentation=segmentation,
            rome_source=str(ext_d.get("rome_source", "humerus")),
            stats=stats,
        )

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("ascii")).hexdigest()[:16]


def read_config(path: Path) -> AnalysisConfig:
    return AnalysisConfig.from_dict(_load_json(path), path=str(path))


def write_config(path: Path, config: AnalysisConfig) -> None:
    Path(path).write_text(_dump_json(config.to_dict()), encoding="utf-8")
