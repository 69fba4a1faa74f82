"""Per-session kinematic scalars from joint-angle series.

The session value of every range of motion is the mean over valid
repetitions (the best repetition is kept alongside in the detail list).
Activation time is the span from a sustained angular-speed onset to 95%
of the repetition's amplitude; the onset lead is positive when the
scapula starts before the humerus. Event detection runs on the smoothed
series, ranges of motion on the unsmoothed series, so smoothing cannot
shave the reported amplitude.

A task whose extraction fails (no movement, no qualifying onset, missing
scapula stream) yields absent values and a session flag rather than an
error; failures before any task can be cut out (ingestion, fusion,
calibration) propagate with their stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import fusion
from .anatomy import (
    Joint,
    JointAngleSeries,
    SensorSite,
    calibrate,
    joint_angles,
)
from .errors import (
    NoMovement,
    NoOnset,
    NoValidRepetition,
    TimestampMismatch,
    TooShort,
    ValidationError,
)
from .segment import Repetition, detect_onset, find_repetitions, smooth
from .sessionio import AnalysisConfig, SessionData, TaskKind
from .stats import CohortRecord

PARAMS_SCHEMA = "session-params/1"

PARAMETER_KEYS = (
    "rom_elevation",
    "rom_abduction",
    "rom_scapula",
    "activation_scapula",
    "activation_humerus",
    "onset_lead_scapula",
    "shr_ratio",
)


@dataclass(frozen=True)
class RepetitionDetail:
    """Everything extracted from one repetition of one task."""

    task: str
    index: int
    t_start: float
    t_peak: float
    t_end: float
    peak_deg: float
    valid: bool
    invalid_reason: str | None = None
    rom_primary: float | None = None
    rom_scapula: float | None = None
    onset_humerus: float | None = None
    attain_humerus: float | None = None
    onset_scapula: float | None = None
    attain_scapula: float | None = None


@dataclass(frozen=True)
class SessionParameters:
    """The extracted scalars of one recorded session."""

    subject: str
    group: str
    timepoint: str | None
    side: str
    config_hash: str
    rom_elevation: float | None
    rom_abduction: float | None
    rom_scapula: float | None
    activation_scapula: float | None
    activation_humerus: float | None
    onset_lead_scapula: float | None
    shr_ratio: float | None
    n_repetitions: Mapping[str, int]
    repetitions: tuple[RepetitionDetail, ...]
    flags: tuple[str, ...]

    def _best(self, task: str, attr: str) -> float | None:
        vals = [
            getattr(r, attr)
            for r in self.repetitions
            if r.task == task and r.valid and getattr(r, attr) is not None
        ]
        return max(vals) if vals else None

    @property
    def rom_elevation_best(self) -> float | None:
        return self._best(TaskKind.ELEVATION.value, "rom_primary")

    @property
    def rom_abduction_best(self) -> float | None:
        return self._best(TaskKind.ABDUCTION.value, "rom_primary")

    @property
    def rom_scapula_best(self) -> float | None:
        return self._best(TaskKind.ABDUCTION.value, "rom_scapula")

    def values(self) -> dict[str, float | None]:
        return {k: getattr(self, k) for k in PARAMETER_KEYS}

    def cohort_record(self) -> CohortRecord:
        return CohortRecord(
            subject=self.subject,
            group=self.group,
            timepoint=self.timepoint,
            values=self.values(),
        )

    def to_dict(self) -> dict:
        return {
            "schema": PARAMS_SCHEMA,
            "subject": self.subject,
            "group": self.group,
            "timepoint": self.timepoint,
            "side": self.side,
            "config_hash": self.config_hash,
            "parameters": self.values(),
            "best": {
                "rom_elevation": self.rom_elevation_best,
                "rom_abduction": self.rom_abduction_best,
                "rom_scapula": self.rom_scapula_best,
            },
            "n_repetitions": dict(self.n_repetitions),
            "repetitions": [
                {
                    "task": r.task,
                    "index": r.index,
                    "t_start": r.t_start,
                    "t_peak": r.t_peak,
                    "t_end": r.t_end,
                    "peak_deg": r.peak_deg,
                    "valid": r.valid,
                    "invalid_reason": r.invalid_reason,
                    "rom_primary": r.rom_primary,
                    "rom_scapula": r.rom_scapula,
                    "onset_humerus": r.onset_humerus,
                    "attain_humerus": r.attain_humerus,
                    "onset_scapula": r.onset_scapula,
                    "attain_scapula": r.attain_scapula,
                }
                for r in self.repetitions
            ],
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SessionParameters":
        if d.get("schema") != PARAMS_SCHEMA:
            raise ValidationError(
                f"unsupported session-parameters schema {d.get('schema')!r}"
            )
        p = d.get("parameters", {})
        reps = tuple(
            RepetitionDetail(
                task=r["task"],
                index=int(r["index"]),
                t_start=float(r["t_start"]),
                t_peak=float(r["t_peak"]),
                t_end=float(r["t_end"]),
                peak_deg=float(r["peak_deg"]),
                valid=bool(r["valid"]),
                invalid_reason=r.get("invalid_reason"),
                rom_primary=r.get("rom_primary"),
                rom_scapula=r.get("rom_scapula"),
                onset_humerus=r.get("onset_humerus"),
                attain_humerus=r.get("attain_humerus"),
                onset_scapula=r.get("onset_scapula"),
                attain_scapula=r.get("attain_scapula"),
            )
            for r in d.get("repetitions", ())
        )
        return cls(
            subject=str(d.get("subject", "")),
            group=str(d.get("group", "")),
            timepoint=d.get("timepoint"),
            side=str(d.get("side", "")),
            config_hash=str(d.get("config_hash", "")),
            rom_elevation=p.get("rom_elevation"),
            rom_abduction=p.get("rom_abduction"),
            rom_scapula=p.get("rom_scapula"),
            activation_scapula=p.get("activation_scapula"),
            activation_humerus=p.get("activation_humerus"),
            onset_lead_scapula=p.get("onset_lead_scapula"),
            shr_ratio=p.get("shr_ratio"),
            n_repetitions={k: int(v) for k, v in d.get("n_repetitions", {}).items()},
            repetitions=reps,
            flags=tuple(d.get("flags", ())),
        )


def extract_rom(values: np.ndarray, reps: Sequence[Repetition]) -> tuple[float, list[float | None]]:
    """Range of motion per valid repetition (max minus min on the raw series).

    Returns the session mean and the per-repetition list (None for invalid
    repetitions). Raises ``NoValidRepetition`` when nothing qualifies.
    """
    values = np.asarray(values, dtype=float)
    per_rep: list[float | None] = []
    kept: list[float] = []
    for rep in reps:
        if not rep.valid:
            per_rep.append(None)
            continue
        window = values[rep.i_start : rep.i_end + 1]
        rom = float(np.max(window) - np.min(window))
        per_rep.append(rom)
        kept.append(rom)
    if not kept:
        raise NoValidRepetition("no valid repetition to take a range of motion from")
    return float(np.mean(kept)), per_rep


@dataclass(frozen=True)
class ActivationSummary:
    activation_scapula: float
    activation_humerus: float
    onset_lead_scapula: float
    events: tuple[tuple[int, dict], ...]  # (rep index, event fields)
    invalid: tuple[tuple[int, str], ...]  # (rep index, reason)


def extract_activation(
    t: np.ndarray,
    scapula_values: np.ndarray,
    humerus_values: np.ndarray,
    reps: Sequence[Repetition],
    onset_speed: float = 5.0,
    onset_hold: float = 0.1,
) -> ActivationSummary:
    """Per-repetition onsets of both segments and their session means.

    ``onset_lead_scapula`` is the mean of (humerus onset - scapula onset):
    positive when the scapula starts first. Repetitions where either
    segment never qualifies are reported invalid; if none survive,
    ``NoValidRepetition`` is raised.
    """
    events = []
    invalid = []
    act_s, act_h, leads = [], [], []
    for rep in reps:
        if not rep.valid:
            invalid.append((rep.index, "invalid before onset detection"))
            continue
        try:
            ev_h = detect_onset(t, humerus_values, rep, onset_speed, onset_hold, "humerus")
            ev_s = detect_onset(t, scapula_values, rep, onset_speed, onset_hold, "scapula")
        except NoOnset as exc:
            invalid.append((rep.index, str(exc)))
            continue
        act_h.append(ev_h.activation_time)
        act_s.append(ev_s.activation_time)
        leads.append(ev_h.t_onset - ev_s.t_onset)
        events.append(
            (
                rep.index,
                {
                    "onset_humerus": ev_h.t_onset,
                    "attain_humerus": ev_h.t_attain,
                    "onset_scapula": ev_s.t_onset,
                    "attain_scapula": ev_s.t_attain,
                },
            )
        )
    if not act_h:
        raise NoValidRepetition("no repetition with qualifying onsets in both segments")
    return ActivationSummary(
        activation_scapula=float(np.mean(act_s)),
        activation_humerus=float(np.mean(act_h)),
        onset_lead_scapula=float(np.mean(leads)),
        events=tuple(events),
        invalid=tuple(invalid),
    )


@dataclass
class _TaskOutput:
    rom_primary: float | None = None
    rom_scapula: float | None = None
    activation: ActivationSummary | None = None
    details: list[RepetitionDetail] = field(default_factory=list)
    n_valid: int = 0
    flags: list[str] = field(default_factory=list)


def _extract_task(
    task: TaskKind,
    primary: JointAngleSeries,
    scapular: JointAngleSeries | None,
    config: AnalysisConfig,
) -> _TaskOutput:
    """Shared task extraction: segmentation, ROMs, onsets.

    ``primary`` carries the angle that defines repetitions (humeral or
    forearm elevation); ``scapular`` is the scapulothoracic series on the
    same timeline, when available.
    """
    out = _TaskOutput()
    seg = config.segmentation
    label = task.value
    t = primary.t
    raw = primary.primary
    smoothed = smooth(t, raw, seg.smooth_window)
    try:
        reps = find_repetitions(
            t,
            smoothed,
            min_peak_deg=seg.min_peak_deg,
            peak_fraction=seg.peak_fraction,
            min_separation_s=seg.min_separation,
        )
    except (NoMovement, TooShort) as exc:
        out.flags.append(f"{label}: {exc}")
        return out

    scap_raw = scap_smooth = None
    if scapular is not None:
        if not np.array_equal(scapular.t, t):
            raise TimestampMismatch(
                "scapulothoracic series is not on the humerothoracic timeline"
            )
        scap_raw = scapular.primary
        scap_smooth = smooth(t, scap_raw, seg.smooth_window)

    activation = None
    rep_events: dict[int, dict] = {}
    if task == TaskKind.ABDUCTION and scap_smooth is not None:
        try:
            activation = extract_activation(
                t, scap_smooth, smoothed, reps, seg.onset_speed, seg.onset_hold
            )
            rep_events = dict(activation.events)
            for index, reason in activation.invalid:
                out.flags.append(f"{label}: repetition {index} invalid: {reason}")
            reps = [
                rep if rep.index in rep_events else replace(rep, valid=False)
                for rep in reps
            ]
        except NoValidRepetition as exc:
            out.flags.append(f"{label}: activation extraction failed: {exc}")
            reps = [replace(rep, valid=False) for rep in reps]
    elif task == TaskKind.ABDUCTION:
        out.flags.append(f"{label}: no scapula stream; rhythm parameters absent")

    rom_per_rep: list[float | None] = [None] * len(reps)
    scap_per_rep: list[float | None] = [None] * len(reps)
    try:
        rom_mean, rom_per_rep = extract_rom(raw, reps)
        out.rom_primary = rom_mean
    except NoValidRepetition as exc:
        out.flags.append(f"{label}: {exc}")
    if scap_raw is not None and task == TaskKind.ABDUCTION:
        try:
            scap_mean, scap_per_rep = extract_rom(scap_raw, reps)
            out.rom_scapula = scap_mean
        except NoValidRepetition:
            pass

    out.activation = activation
    out.n_valid = sum(1 for rep in reps if rep.valid)
    for k, rep in enumerate(reps):
        ev = rep_events.get(rep.index, {})
        reason = None
        if not rep.valid:
            reason = next(
                (r for i, r in (activation.invalid if activation else ()) if i == rep.index),
                "no qualifying onset",
            )
        out.details.append(
            RepetitionDetail(
                task=label,
                index=rep.index,
                t_start=rep.t_start,
                t_peak=rep.t_peak,
                t_end=rep.t_end,
                peak_deg=rep.peak_value,
                valid=rep.valid,
                invalid_reason=reason,
                rom_primary=rom_per_rep[k],
                rom_scapula=scap_per_rep[k],
                **ev,
            )
        )
    return out


def compute_joint_series(
    session: SessionData, config: AnalysisConfig
) -> dict[Joint, JointAngleSeries]:
    """Front half of the pipeline: fusion, calibration, joint angles."""
    manifest = session.manifest
    orientations = {
        site: fusion.estimate(stream, config.fusion)
        for site, stream in session.streams.items()
    }
    cal = calibrate(orientations, manifest.calibration)

    series: dict[Joint, JointAngleSeries] = {}
    if SensorSite.HUMERUS in orientations and SensorSite.THORAX in orientations:
        series[Joint.HUMEROTHORACIC] = joint_angles(orientations, cal, Joint.HUMEROTHORACIC)
    if SensorSite.SCAPULA in orientations and SensorSite.THORAX in orientations:
        series[Joint.SCAPULOTHORACIC] = joint_angles(orientations, cal, Joint.SCAPULOTHORACIC)
    if SensorSite.FOREARM in orientations and SensorSite.THORAX in orientations:
        series[Joint.FOREARM_THORACIC] = joint_angles(orientations, cal, Joint.FOREARM_THORACIC)
    return series


def extract_session(session: SessionData, config: AnalysisConfig) -> SessionParameters:
    """Full pipeline: fusion, calibration, joint angles, segmentation, scalars.

    Deterministic: identical session files and config give identical
    output. Values of absent tasks or failed extractions are None, with a
    flag naming the cause.
    """
    manifest = session.manifest
    series = compute_joint_series(session, config)
    return extract_from_angles(
        series,
        manifest_subject=manifest.subject,
        group=manifest.group,
        timepoint=manifest.timepoint,
        side=manifest.side,
        tasks=[(w.kind, w.t_start, w.t_end) for w in manifest.tasks],
        config=config,
    )


def extract_from_angles(
    series: Mapping[Joint, JointAngleSeries],
    *,
    manifest_subject: str,
    group: str,
    timepoint: str | None,
    side: str,
    tasks: Sequence[tuple[TaskKind, float, float]],
    config: AnalysisConfig,
) -> SessionParameters:
    """Scalar extraction from precomputed joint-angle series.

    This is the back half of ``extract_session``; the synthetic round-trip
    harness also runs it directly on ground-truth angle series so that
    measured and reference parameters share one set of definitions.
    """
    flags: list[str] = []
    details: list[RepetitionDetail] = []
    n_repetitions: dict[str, int] = {}
    rom_elevation = rom_abduction = rom_scapula = None
    activation_scapula = activation_humerus = onset_lead = shr_ratio = None

    for kind, t_start, t_end in tasks:
        if kind == TaskKind.ELEVATION:
            joint = Joint.HUMEROTHORACIC
            if config.rome_source == "forearm":
                if Joint.FOREARM_THORACIC in series:
                    joint = Joint.FOREARM_THORACIC
                else:
                    flags.append("elevation: no forearm stream; using humerus source")
            if joint not in series:
                flags.append("elevation: no usable joint series")
                continue
            task_series = series[joint].sliced(t_start, t_end)
            if len(task_series) < 2:
                flags.append("elevation: task window holds no samples")
                continue
            out = _extract_task(kind, task_series, None, config)
            rom_elevation = out.rom_primary
            n_repetitions[kind.value] = out.n_valid
            details.extend(out.details)
            flags.extend(out.flags)
        else:
            if Joint.HUMEROTHORACIC not in series:
                flags.append("abduction: no humerothoracic series")
                continue
            task_series = series[Joint.HUMEROTHORACIC].sliced(t_start, t_end)
            if len(task_series) < 2:
                flags.append("abduction: task window holds no samples")
                continue
            scap = (
                series[Joint.SCAPULOTHORACIC].sliced(t_start, t_end)
                if Joint.SCAPULOTHORACIC in series
                else None
            )
            out = _extract_task(kind, task_series, scap, config)
            rom_abduction = out.rom_primary
            rom_scapula = out.rom_scapula
            if out.activation is not None:
                activation_scapula = out.activation.activation_scapula
                activation_humerus = out.activation.activation_humerus
                onset_lead = out.activation.onset_lead_scapula
            if rom_abduction is not None and rom_scapula is not None and rom_scapula > 0:
                shr_ratio = rom_abduction / rom_scapula
            n_repetitions[kind.value] = out.n_valid
            details.extend(out.details)
            flags.extend(out.flags)

    return SessionParameters(
        subject=manifest_subject,
        group=group,
        timepoint=timepoint,
        side=side,
        config_hash=config.config_hash(),
        rom_elevation=rom_elevation,
        rom_abduction=rom_abduction,
        rom_scapula=rom_scapula,
        activation_scapula=activation_scapula,
        activation_humerus=activation_humerus,
        onset_lead_scapula=onset_lead,
        shr_ratio=shr_ratio,
        n_repetitions=n_repetitions,
        repetitions=tuple(details),
        flags=tuple(flags),
    )
