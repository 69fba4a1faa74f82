import json
from pathlib import Path

import pytest

from shoulderkin.cli import main
from shoulderkin.reference import reference_path
from shoulderkin.synth import MotionProfile, NoiseSpec


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestUsage:
    def test_no_subcommand_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--out", "x", "--frobnicate"])
        assert exc.value.code == 1

    def test_unknown_subcommand_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["transmogrify"])
        assert exc.value.code == 1


class TestPipelineFlow:
    def test_simulate_analyze_cohort_tables(self, capsys, tmp_path):
        sess = tmp_path / "sess"
        code, _, _ = run(capsys, "simulate", "--out", str(sess), "--subject", "p1",
                         "--group", "AC", "--timepoint", "T0")
        assert code == 0
        assert (sess / "manifest.json").exists()
        assert (sess / "humerus.csv").exists()

        params = tmp_path / "p1.json"
        code, _, _ = run(capsys, "analyze", "--session", str(sess), "--out", str(params))
        assert code == 0
        payload = json.loads(params.read_text())
        assert payload["schema"] == "session-params/1"
        assert payload["parameters"]["rom_abduction"] == pytest.approx(120.0, abs=1.0)
        assert (tmp_path / "p1.svg").exists()

        report = tmp_path / "cohort.json"
        code, _, _ = run(capsys, "cohort", "--reports", str(tmp_path / "p1.json"),
                         "--out", str(report))
        assert code == 0
        assert json.loads(report.read_text())["schema"] == "cohort-report/1"

        code, out, _ = run(capsys, "tables", "--cohort", str(report))
        assert code == 0
        assert "Mean ± SD" in out

    def test_tables_on_reference_fixture(self, capsys):
        code, out, _ = run(capsys, "tables", "--cohort", str(reference_path()))
        assert code == 0
        assert "34.6 ± 7.7" in out
        assert "145.6 ± 7.9" in out

    def test_tables_csv_format(self, capsys, tmp_path):
        out_file = tmp_path / "tables.csv"
        code, _, _ = run(capsys, "tables", "--cohort", str(reference_path()),
                         "--format", "csv", "--out", str(out_file))
        assert code == 0
        assert "# roms_ac" in out_file.read_text()


class TestErrors:
    def test_missing_session_exits_two(self, capsys, tmp_path):
        code, _, err = run(capsys, "analyze", "--session", str(tmp_path / "nope"),
                           "--out", str(tmp_path / "o.json"))
        assert code == 2
        assert "error[io]" in err

    def test_invalid_profile_exits_two(self, capsys, tmp_path):
        bad = tmp_path / "profile.json"
        bad.write_text(json.dumps({"schema": "motion-profile/1", "n_reps": 0}))
        code, _, err = run(capsys, "simulate", "--profile", str(bad),
                           "--out", str(tmp_path / "s"))
        assert code == 2
        assert "error[synth]" in err

    def test_cohort_no_matches_exits_two(self, capsys, tmp_path):
        code, _, err = run(capsys, "cohort", "--reports", str(tmp_path / "*.json"),
                           "--out", str(tmp_path / "r.json"))
        assert code == 2
        assert "error[io]" in err


class TestRoundtripCommand:
    def test_default_profile_passes(self, capsys):
        code, out, _ = run(capsys, "roundtrip")
        assert code == 0
        assert "within tolerances" in out

    def test_tolerance_failure_exits_three(self, capsys, monkeypatch):
        from shoulderkin import cli
        from shoulderkin.synth import RoundTripReport, RoundTripRow

        failing = RoundTripReport(
            rows=(
                RoundTripRow(
                    "rom_abduction", "deg", 120.0, 120.0, 112.0, 8.0, 1.0, False
                ),
            ),
            passed=False,
            n_repetitions_expected=5,
            n_repetitions_measured=5,
        )
        monkeypatch.setattr(cli, "round_trip_report", lambda *a, **k: failing)
        code, out, err = run(capsys, "roundtrip")
        assert code == 3
        assert "error[tolerance]" in err
        assert "FAIL" in out

    def test_overwhelming_noise_fails_loudly(self, capsys, tmp_path):
        # sensor noise past the stillness ceiling cannot be calibrated
        profile = tmp_path / "profile.json"
        p = MotionProfile(noise=NoiseSpec(accel_sigma=5.0, gyro_sigma=0.6, mag_sigma=0.5))
        profile.write_text(json.dumps(p.to_dict()))
        code, _, err = run(capsys, "roundtrip", "--profile", str(profile))
        assert code == 2
        assert "error[calib]" in err


class TestDeterminism:
    def test_simulate_twice_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(capsys, "simulate", "--out", str(a), "--seed", "5")
        run(capsys, "simulate", "--out", str(b), "--seed", "5")
        for name in ("manifest.json", "thorax.csv", "scapula.csv", "humerus.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_analyze_twice_identical(self, capsys, tmp_path):
        sess = tmp_path / "sess"
        run(capsys, "simulate", "--out", str(sess))
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        run(capsys, "analyze", "--session", str(sess), "--out", str(p1))
        run(capsys, "analyze", "--session", str(sess), "--out", str(p2))
        assert p1.read_bytes() == p2.read_bytes()
        assert (tmp_path / "r1.svg").read_bytes() == (tmp_path / "r2.svg").read_bytes()
