"""Command-line interface for the shoulder-kinematics toolkit.

Subcommands: ``simulate`` (write a synthetic session), ``analyze``
(session directory to parameter report plus trace figure), ``cohort``
(parameter reports to cohort report), ``tables`` (cohort report to
markdown or CSV) and ``roundtrip`` (synthesis-to-analysis self check).

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 round-trip tolerance failure. Diagnostics name the failing stage.
"""

from __future__ import annotations

import argparse
import glob
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ShoulderKinError, ValidationError
from .params import SessionParameters, compute_joint_series, extract_from_angles, extract_session
from .reference import parse_reference_cohort
from .report import (
    read_report_json,
    render_csv,
    render_markdown,
    render_session_figure,
    report_from_dict,
    write_report_json,
)
from .sessionio import AnalysisConfig, read_config, read_session
from .stats import cohort_tables
from .synth import (
    MotionProfile,
    SESSION_PROFILE_SCHEMA,
    Tolerances,
    round_trip_report,
    write_synthetic_session,
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_profiles(path: Path | None) -> list[MotionProfile]:
    """Read a profile file: either one motion profile or a block list."""
    if path is None:
        return [MotionProfile()]
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"profile file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"profile file {path} is not valid JSON: {exc.msg}") from None
    if payload.get("schema") == SESSION_PROFILE_SCHEMA:
        blocks = payload.get("blocks", ())
        if not blocks:
            raise ValidationError(f"profile file {path} declares no blocks")
        return [MotionProfile.from_dict(b) for b in blocks]
    return [MotionProfile.from_dict(payload)]


def _load_config(path: str | None) -> AnalysisConfig:
    return read_config(Path(path)) if path else AnalysisConfig()


def cmd_simulate(args) -> int:
    profiles = load_profiles(Path(args.profile) if args.profile else None)
    if args.seed is not None:
        profiles = [replace(p, seed=args.seed) for p in profiles]
    write_synthetic_session(
        profiles,
        Path(args.out),
        subject=args.subject,
        group=args.group,
        timepoint=args.timepoint,
    )
    print(f"wrote synthetic session to {args.out}")
    return 0


def cmd_analyze(args) -> int:
    config = _load_config(args.config)
    session = read_session(Path(args.session))
    series = compute_joint_series(session, config)
    m = session.manifest
    result = extract_from_angles(
        series,
        manifest_subject=m.subject,
        group=m.group,
        timepoint=m.timepoint,
        side=m.side,
        tasks=[(w.kind, w.t_start, w.t_end) for w in m.tasks],
        config=config,
    )
    out = Path(args.out)
    out.write_text(
        json.dumps(result.to_dict(), indent=2, ensure_ascii=True) + "\n", encoding="utf-8"
    )
    written = [str(out)]
    if not args.no_plot:
        plot_path = Path(args.plot) if args.plot else out.with_suffix(".svg")
        render_session_figure(result, series, plot_path)
        written.append(str(plot_path))
    print(f"wrote {', '.join(written)}")
    return 0


def _collect_records(pattern: str):
    paths = sorted(glob.glob(pattern))
    if not paths:
        raise ValidationError(f"no report files match {pattern!r}")
    records = []
    summaries = []
    notes = []
    for p in paths:
        payload = json.loads(Path(p).read_text(encoding="utf-8"))
        schema = payload.get("schema")
        if schema == "session-params/1":
            records.append(SessionParameters.from_dict(payload).cohort_record())
        elif schema == "reference-cohort/1":
            ref = parse_reference_cohort(payload)
            records.extend(ref.records)
            summaries.extend(ref.summaries)
            notes.extend(ref.notes)
        else:
            raise ValidationError(f"{p}: unsupported schema {schema!r} in a cohort input")
    return records, summaries, notes


def cmd_cohort(args) -> int:
    config = _load_config(args.config)
    records, summaries, notes = _collect_records(args.reports)
    report = cohort_tables(
        records,
        sd_conventions=config.stats.sd_conventions,
        extra_summaries=summaries,
        notes=notes,
        config_hash=config.config_hash(),
    )
    write_report_json(Path(args.out), report)
    print(f"wrote cohort report for {len(records)} sessions to {args.out}")
    return 0


def cmd_tables(args) -> int:
    path = Path(args.cohort)
    payload = json.loads(path.read_text(encoding="utf-8"))
    schema = payload.get("schema")
    if schema == "cohort-report/1":
        report = report_from_dict(payload)
    elif schema == "reference-cohort/1":
        ref = parse_reference_cohort(payload)
        report = cohort_tables(
            ref.records,
            extra_summaries=ref.summaries,
            notes=ref.notes,
            config_hash="reference-cohort",
        )
    else:
        raise ValidationError(f"{path}: unsupported schema {schema!r} for tables")
    text = render_markdown(report) if args.format == "md" else render_csv(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_roundtrip(args) -> int:
    profiles = load_profiles(Path(args.profile) if args.profile else None)
    if args.seed is not None:
        profiles = [replace(p, seed=args.seed) for p in profiles]
    tolerances = Tolerances.for_noise(profiles[0].noise)
    report = round_trip_report(profiles, config=_load_config(args.config), tolerances=tolerances)
    header = f"{'parameter':22s} {'reference':>12s} {'measured':>12s} {'error':>10s} {'tol':>8s}  status"
    print(header)
    for r in report.rows:
        ref = "-" if r.reference is None else f"{r.reference:.4f}"
        got = "-" if r.measured is None else f"{r.measured:.4f}"
        err = "-" if r.error is None else f"{r.error:.4f}"
        status = "ok" if r.passed else "FAIL"
        print(f"{r.parameter:22s} {ref:>12s} {got:>12s} {err:>10s} {r.tolerance:>8g}  {status}")
    print(
        f"repetitions: expected {report.n_repetitions_expected}, "
        f"measured {report.n_repetitions_measured}"
    )
    if not report.passed:
        print("error[tolerance]: round trip exceeded its error bounds", file=sys.stderr)
        return 3
    print("round trip within tolerances")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="shoulderkin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="write a synthetic IMU session")
    sim.add_argument("--profile", help="motion profile JSON (default: built-in profile)")
    sim.add_argument("--out", required=True, help="session directory to create")
    sim.add_argument("--seed", type=int, help="override the profile noise seed")
    sim.add_argument("--subject", default="synthetic", help="subject id for the manifest")
    sim.add_argument("--group", default="HC", choices=("AC", "HC"))
    sim.add_argument("--timepoint", default=None, choices=("T0", "T1"))
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="extract session parameters from a session")
    ana.add_argument("--session", required=True, help="session directory")
    ana.add_argument("--config", help="analysis config JSON (default: built-in defaults)")
    ana.add_argument("--out", required=True, help="parameter report JSON to write")
    ana.add_argument("--plot", help="trace figure path (default: report path with .svg)")
    ana.add_argument("--no-plot", action="store_true", help="skip the trace figure")
    ana.set_defaults(func=cmd_analyze)

    coh = sub.add_parser("cohort", help="aggregate parameter reports into a cohort report")
    coh.add_argument(
        "--reports", required=True,
        help="glob of session-parameter reports (a reference-cohort file also works)",
    )
    coh.add_argument("--config", help="analysis config JSON")
    coh.add_argument("--out", required=True, help="cohort report JSON to write")
    coh.set_defaults(func=cmd_cohort)

    tab = sub.add_parser("tables", help="render cohort tables as markdown or CSV")
    tab.add_argument(
        "--cohort", required=True,
        help="cohort report JSON (or a reference-cohort fixture)",
    )
    tab.add_argument("--format", default="md", choices=("md", "csv"))
    tab.add_argument("--out", help="write to a file instead of stdout")
    tab.set_defaults(func=cmd_tables)

    rt = sub.add_parser("roundtrip", help="synthesis-to-analysis self check")
    rt.add_argument("--profile", help="motion profile JSON (default: built-in profile)")
    rt.add_argument("--config", help="analysis config JSON")
    rt.add_argument("--seed", type=int, help="override the profile noise seed")
    rt.set_defaults(func=cmd_roundtrip)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShoulderKinError as exc:
        print(f"error[{exc.stage}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
