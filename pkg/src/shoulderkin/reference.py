"""Checked-in reference cohort and its conversion to cohort records.

The fixture transcribes the published per-subject result tables (six
adhesive-capsulitis patients at T0/T1, seven healthy controls). It has
no raw IMU recordings, so it enters the pipeline at the session-parameter
level. Group summaries that were only ever printed as mean +/- SD (the
control group's scapular range and activation times) are carried through
as non-recomputed summaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .stats import CohortRecord, CohortReport, GroupSummary, cohort_tables

PAIRED_PARAMETERS = (
    "rom_elevation",
    "rom_abduction",
    "rom_scapula",
    "activation_scapula",
    "activation_humerus",
)

_SUMMARY_DESCRIPTIONS = {
    "rom_scapula": "Scapular range of motion in abduction, healthy controls (deg)",
    "activation_scapula": "Scapula activation time, healthy controls (s)",
    "activation_humerus": "Humerus activation time, healthy controls (s)",
}


@dataclass(frozen=True)
class ReferenceCohort:
    records: tuple[CohortRecord, ...]
    summaries: tuple[GroupSummary, ...]
    source_footers: dict
    notes: tuple[str, ...]
    description: str


def reference_path() -> Path:
    """Filesystem path of the packaged fixture."""
    return Path(resources.files("shoulderkin").joinpath("data/reference_cohort.json"))


def parse_reference_cohort(payload: dict) -> ReferenceCohort:
    """Build cohort records from a reference-cohort document."""
    if payload.get("schema") != "reference-cohort/1":
        raise ValueError(
            f"not a reference-cohort document (schema={payload.get('schema')!r})"
        )
    records = []
    for entry in payload["ac_patients"]:
        for timepoint in ("T0", "T1"):
            values = {
                p: entry[p][timepoint]
                for p in PAIRED_PARAMETERS
                if p in entry and timepoint in entry[p]
            }
            records.append(
                CohortRecord(
                    subject=entry["subject"], group="AC", timepoint=timepoint, values=values
                )
            )
    for entry in payload["healthy_controls"]:
        values = {k: v for k, v in entry.items() if k != "subject"}
        records.append(
            CohortRecord(subject=entry["subject"], group="HC", timepoint=None, values=values)
        )

    summaries = []
    for parameter, ms in payload.get("healthy_summaries", {}).items():
        summaries.append(
            GroupSummary(
                summary_id=f"hc_{parameter}_printed",
                description=_SUMMARY_DESCRIPTIONS.get(parameter, parameter)
                + " [printed summary, per-subject values unavailable]",
                n=None,
                mean=float(ms["mean"]),
                sd=float(ms["sd"]) if ms.get("sd") is not None else None,
                recomputed=False,
            )
        )
    return ReferenceCohort(
        records=tuple(records),
        summaries=tuple(summaries),
        source_footers=payload.get("source_footers", {}),
        notes=tuple(payload.get("notes", ())),
        description=payload.get("description", ""),
    )


def load_reference_cohort(path: Path | None = None) -> ReferenceCohort:
    p = Path(path) if path is not None else reference_path()
    with open(p, encoding="utf-8") as fh:
        return parse_reference_cohort(json.load(fh))


def build_reference_report(path: Path | None = None) -> CohortReport:
    """Cohort report (tables, footers, test battery) for the fixture."""
    ref = load_reference_cohort(path)
    return cohort_tables(
        ref.records,
        extra_summaries=ref.summaries,
        notes=ref.notes,
        config_hash="reference-cohort",
    )
