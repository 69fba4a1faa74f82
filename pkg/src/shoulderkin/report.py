"""Report emission: structured JSON, markdown/CSV tables, trace figures.

The markdown tables mirror the clinical layout: one row per subject,
a ``Mean ± SD`` footer per column, then the test battery and notes.
Figures are SVG with a pinned hash salt and no date metadata, so every
emission path is byte-deterministic for identical inputs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .anatomy import Joint, JointAngleSeries
from .errors import ValidationError
from .params import SessionParameters
from .stats import (
    BatteryEntry,
    CohortReport,
    CohortTable,
    ColumnSpec,
    GroupSummary,
    TableRow,
    TestResult,
)

REPORT_SCHEMA = "cohort-report/1"
SVG_HASH_SALT = "shoulderkin"


# --- structured serialization ---------------------------------------------------


def _test_result_to_dict(r: TestResult) -> dict:
    return {
        "test": r.test,
        "statistic": r.statistic,
        "n": r.n,
        "m": r.m,
        "method": r.method,
        "sidedness": r.sidedness,
        "p": r.p,
        "p_one_sided": r.p_one_sided,
        "p_two_sided": r.p_two_sided,
        "ties": r.ties,
        "zeros_dropped": r.zeros_dropped,
    }


def _test_result_from_dict(d: Mapping) -> TestResult:
    return TestResult(
        test=d["test"],
        statistic=float(d["statistic"]),
        n=int(d["n"]),
        m=None if d.get("m") is None else int(d["m"]),
        method=d["method"],
        sidedness=d["sidedness"],
        p=float(d["p"]),
        p_one_sided=float(d["p_one_sided"]),
        p_two_sided=float(d["p_two_sided"]),
        ties=bool(d["ties"]),
        zeros_dropped=int(d.get("zeros_dropped", 0)),
    )


def report_to_dict(report: CohortReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "config_hash": report.config_hash,
        "session_ids": list(report.session_ids),
        "tables": [
            {
                "table_id": t.table_id,
                "title": t.title,
                "group": t.group,
                "subject_heading": t.subject_heading,
                "sd_convention": t.sd_convention,
                "columns": [
                    {"heading": c.heading, "parameter": c.parameter, "timepoint": c.timepoint}
                    for c in t.columns
                ],
                "rows": [{"subject": r.subject, "values": list(r.values)} for r in t.rows],
                "footer_mean": list(t.footer_mean),
                "footer_sd": list(t.footer_sd),
            }
            for t in report.tables
        ],
        "summaries": [
            {
                "summary_id": s.summary_id,
                "description": s.description,
                "n": s.n,
                "mean": s.mean,
                "sd": s.sd,
                "recomputed": s.recomputed,
            }
            for s in report.summaries
        ],
        "tests": [
            {
                "test_id": t.test_id,
                "parameter": t.parameter,
                "comparison": t.comparison,
                "result": _test_result_to_dict(t.result),
            }
            for t in report.tests
        ],
        "notes": list(report.notes),
    }


def report_from_dict(d: Mapping) -> CohortReport:
    if d.get("schema") != REPORT_SCHEMA:
        raise ValidationError(f"unsupported report schema {d.get('schema')!r}")
    tables = tuple(
        CohortTable(
            table_id=t["table_id"],
            title=t["title"],
            group=t["group"],
            subject_heading=t["subject_heading"],
            sd_convention=t["sd_convention"],
            columns=tuple(
                ColumnSpec(
                    heading=c["heading"],
                    parameter=c["parameter"],
                    timepoint=c.get("timepoint"),
                )
                for c in t["columns"]
            ),
            rows=tuple(
                TableRow(subject=r["subject"], values=tuple(r["values"])) for r in t["rows"]
            ),
            footer_mean=tuple(t["footer_mean"]),
            footer_sd=tuple(t["footer_sd"]),
        )
        for t in d.get("tables", ())
    )
    summaries = tuple(
        GroupSummary(
            summary_id=s["summary_id"],
            description=s["description"],
            n=s.get("n"),
            mean=float(s["mean"]),
            sd=None if s.get("sd") is None else float(s["sd"]),
            recomputed=bool(s.get("recomputed", True)),
        )
        for s in d.get("summaries", ())
    )
    tests = tuple(
        BatteryEntry(
            test_id=t["test_id"],
            parameter=t["parameter"],
            comparison=t["comparison"],
            result=_test_result_from_dict(t["result"]),
        )
        for t in d.get("tests", ())
    )
    return CohortReport(
        config_hash=d.get("config_hash", ""),
        session_ids=tuple(d.get("session_ids", ())),
        tables=tables,
        summaries=summaries,
        tests=tests,
        notes=tuple(d.get("notes", ())),
    )


def write_report_json(path: Path, report: CohortReport) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), indent=2, ensure_ascii=True) + "\n",
        encoding="utf-8",
    )


def read_report_json(path: Path) -> CohortReport:
    return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# --- table rendering --------------------------------------------------------------


def _decimals_for(parameter: str) -> int:
    # seconds carry two decimals in the clinical tables, degrees one
    return 2 if parameter.startswith(("activation", "onset")) else 1


def _cell(v: float | None, decimals: int = 1) -> str:
    return "-" if v is None else f"{v:.{decimals}f}"


def _footer_cell(mean: float | None, sd: float | None, decimals: int = 1) -> str:
    if mean is None:
        return "-"
    if sd is None:
        return f"{mean:.{decimals}f}"
    return f"{mean:.{decimals}f} ± {sd:.{decimals}f}"


def _p_cell(p: float) -> str:
    return f"{p:.4g}"


def render_markdown(report: CohortReport) -> str:
    lines: list[str] = []
    lines.append("# Cohort report")
    lines.append("")
    lines.append(
        f"{len(report.session_ids)} sessions; config hash `{report.config_hash}`."
    )
    for table in report.tables:
        lines.append("")
        lines.append(f"## {table.title}")
        lines.append("")
        header = [table.subject_heading] + [c.heading for c in table.columns]
        decimals = [_decimals_for(c.parameter) for c in table.columns]
        lines.append("| " + " | ".join(header) + " |")
        lines.append("|" + "|".join(["---"] * len(header)) + "|")
        for row in table.rows:
            cells = [_cell(v, d) for v, d in zip(row.values, decimals)]
            lines.append("| " + " | ".join([row.subject] + cells) + " |")
        footer = [
            _footer_cell(m, s, d)
            for m, s, d in zip(table.footer_mean, table.footer_sd, decimals)
        ]
        lines.append("| Mean ± SD | " + " | ".join(footer) + " |")
        lines.append("")
        lines.append(f"(SD convention: {table.sd_convention})")
    if report.summaries:
        lines.append("")
        lines.append("## Group summaries")
        lines.append("")
        for s in report.summaries:
            n = f", n = {s.n}" if s.n is not None else ""
            d = 2 if "activation" in s.summary_id else 1
            lines.append(f"- {s.description}: {_footer_cell(s.mean, s.sd, d)}{n}")
    if report.tests:
        lines.append("")
        lines.append("## Test battery")
        lines.append("")
        lines.append("| Parameter | Comparison | Test | Statistic | Method | p (two-sided) | p (one-sided) |")
        lines.append("|---|---|---|---|---|---|---|")
        for entry in report.tests:
            r = entry.result
            stat_name = "U" if r.test == "mann-whitney-u" else "W"
            sizes = f"n = {r.n}" + (f", m = {r.m}" if r.m is not None else "")
            lines.append(
                f"| {entry.parameter} | {entry.comparison} | {r.test} "
                f"| {stat_name} = {r.statistic:g} ({sizes}) | {r.method} "
                f"| {_p_cell(r.p_two_sided)} | {_p_cell(r.p_one_sided)} |"
            )
    if report.notes:
        lines.append("")
        lines.append("## Notes")
        lines.append("")
        for i, note in enumerate(report.notes, start=1):
            lines.append(f"{i}. {note}")
    lines.append("")
    return "\n".join(lines)


def render_csv(report: CohortReport) -> str:
    """Delimited rendering: one section per table, then the test battery."""
    lines: list[str] = []
    for table in report.tables:
        lines.append(f"# {table.table_id}: {table.title}")
        header = [table.subject_heading] + [c.heading for c in table.columns]
        decimals = [_decimals_for(c.parameter) for c in table.columns]
        lines.append(",".join(header))
        for row in table.rows:
            cells = [_cell(v, d) for v, d in zip(row.values, decimals)]
            lines.append(",".join([row.subject] + cells))
        lines.append(
            ",".join(
                ["mean"]
                + [
                    "" if m is None else f"{m:.{d}f}"
                    for m, d in zip(table.footer_mean, decimals)
                ]
            )
        )
        lines.append(
            ",".join(
                ["sd"]
                + [
                    "" if s is None else f"{s:.{d}f}"
                    for s, d in zip(table.footer_sd, decimals)
                ]
            )
        )
        lines.append("")
    if report.tests:
        lines.append("# test battery")
        lines.append("parameter,comparison,test,statistic,n,m,method,p_two_sided,p_one_sided")
        for entry in report.tests:
            r = entry.result
            lines.append(
                ",".join(
                    [
                        entry.parameter,
                        entry.comparison,
                        r.test,
                        f"{r.statistic:g}",
                        str(r.n),
                        "" if r.m is None else str(r.m),
                        r.method,
                        _p_cell(r.p_two_sided),
                        _p_cell(r.p_one_sided),
                    ]
                )
            )
        lines.append("")
    return "\n".join(lines)


# --- session trace figure ---------------------------------------------------------


def render_session_figure(
    result: SessionParameters,
    series: Mapping[Joint, JointAngleSeries],
    path: Path,
) -> None:
    """Angle traces with repetition boundaries, as a deterministic SVG."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig, ax = plt.subplots(figsize=(9.0, 4.0))
        if Joint.HUMEROTHORACIC in series:
            s = series[Joint.HUMEROTHORACIC]
            ax.plot(s.t, s.a2, label="humeral elevation", color="#1f77b4", lw=1.2)
        if Joint.SCAPULOTHORACIC in series:
            s = series[Joint.SCAPULOTHORACIC]
            ax.plot(s.t, s.a2, label="scapular upward rotation", color="#d62728", lw=1.2)
        if Joint.FOREARM_THORACIC in series:
            s = series[Joint.FOREARM_THORACIC]
            ax.plot(s.t, s.a2, label="forearm elevation", color="#2ca02c", lw=1.0, ls="--")
        for rep in result.repetitions:
            color = "#2ca02c" if rep.valid else "#7f7f7f"
            ax.axvspan(rep.t_start, rep.t_end, color=color, alpha=0.08)
            ax.axvline(rep.t_peak, color=color, alpha=0.35, lw=0.8)
        tp = f"-{result.timepoint}" if result.timepoint else ""
        ax.set_title(f"{result.subject} ({result.group}{tp}): angle traces and repetitions")
        ax.set_xlabel("time (s)")
        ax.set_ylabel("angle (deg)")
        ax.legend(loc="upper right", fontsize=9)
        ax.grid(True, alpha=0.25)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
