import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from shoulderkin.anatomy import SensorSite
from shoulderkin.errors import ParseError, SessionWriteError, ValidationError
from shoulderkin.fusion import FilterConfig, ImuStream
from shoulderkin.sessionio import (
    AnalysisConfig,
    SegmentationSettings,
    SessionManifest,
    StatsSettings,
    TaskKind,
    TaskWindow,
    manifest_from_dict,
    manifest_to_dict,
    read_config,
    read_session,
    read_stream_csv,
    write_config,
    write_session,
    write_stream_csv,
)


def random_stream(site=SensorSite.THORAX, n=50, seed=0):
    rng = np.random.default_rng(seed)
    return ImuStream(
        site=site.value,
        t=np.arange(n) / 100.0,
        accel=rng.normal(0, 5, (n, 3)),
        gyro=rng.normal(0, 1, (n, 3)),
        mag=rng.normal(0, 1, (n, 3)),
    )


def simple_manifest(**overrides):
    kwargs = dict(
        subject="s01",
        group="HC",
        timepoint=None,
        side="right",
        calibration=(0.05, 1.2),
        tasks=(TaskWindow(TaskKind.ABDUCTION, 1.5, 4.0),),
        streams={SensorSite.THORAX: "thorax.csv"},
        sample_rate_hint=100.0,
    )
    kwargs.update(overrides)
    return SessionManifest(**kwargs)


class TestStreamCsv:
    def test_minimal_two_sample_file(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text(
            "t,ax,ay,az,gx,gy,gz,mx,my,mz\n"
            "0,0,9.80665,0,0,0,0,1,0,0\n"
            "0.01,0,9.80665,0,0,0,0,1,0,0\n"
        )
        stream = read_stream_csv(p, SensorSite.THORAX)
        assert len(stream) == 2
        assert stream.accel[1, 1] == 9.80665

    def test_write_read_round_trip_values(self, tmp_path):
        stream = random_stream(n=120)
        p = tmp_path / "thorax.csv"
        write_stream_csv(p, stream)
        back = read_stream_csv(p, SensorSite.THORAX)
        # values survive at the 9-significant-digit serialization precision
        assert_allclose(back.accel, stream.accel, rtol=1e-8)
        assert_allclose(back.t, stream.t, rtol=1e-8)

    def test_second_write_byte_identical(self, tmp_path):
        stream = random_stream(n=200, seed=3)
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        write_stream_csv(p1, stream)
        back = read_stream_csv(p1, SensorSite.THORAX)
        write_stream_csv(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_non_monotone_rejected_with_line(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text(
            "t,ax,ay,az,gx,gy,gz,mx,my,mz\n"
            "0,0,0,0,0,0,0,0,0,0\n"
            "0.01,0,0,0,0,0,0,0,0,0\n"
            "0.01,0,0,0,0,0,0,0,0,0\n"
        )
        with pytest.raises(ValidationError) as exc:
            read_stream_csv(p, SensorSite.THORAX)
        assert exc.value.line == 4

    def test_bad_header(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("time,ax\n")
        with pytest.raises(ParseError) as exc:
            read_stream_csv(p, SensorSite.THORAX)
        assert exc.value.line == 1

    def test_non_numeric_field(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text(
            "t,ax,ay,az,gx,gy,gz,mx,my,mz\n"
            "0,0,oops,0,0,0,0,0,0,0\n"
        )
        with pytest.raises(ParseError) as exc:
            read_stream_csv(p, SensorSite.THORAX)
        assert exc.value.line == 2

    def test_wrong_field_count(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("t,ax,ay,az,gx,gy,gz,mx,my,mz\n0,1,2\n")
        with pytest.raises(ParseError):
            read_stream_csv(p, SensorSite.THORAX)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            read_stream_csv(tmp_path / "nope.csv", SensorSite.THORAX)


class TestManifest:
    def test_round_trip(self):
        m = simple_manifest()
        back = manifest_from_dict(manifest_to_dict(m))
        assert back == m

    def test_overlapping_tasks_rejected(self):
        with pytest.raises(ValidationError):
            simple_manifest(
                tasks=(
                    TaskWindow(TaskKind.ABDUCTION, 1.5, 4.0),
                    TaskWindow(TaskKind.ELEVATION, 3.5, 6.0),
                )
            )

    def test_calibration_must_precede_tasks(self):
        with pytest.raises(ValidationError):
            simple_manifest(calibration=(0.1, 2.0))

    def test_unknown_group(self):
        with pytest.raises(ValidationError):
            simple_manifest(group="XX")

    def test_unknown_site_rejected(self):
        d = manifest_to_dict(simple_manifest())
        d["streams"]["elbow"] = "elbow.csv"
        with pytest.raises(ValidationError):
            manifest_from_dict(d)

    def test_unknown_key_rejected(self):
        d = manifest_to_dict(simple_manifest())
        d["operator"] = "someone"
        with pytest.raises(ValidationError):
            manifest_from_dict(d)


class TestSession:
    def write_simple(self, tmp_path, n=300):
        stream = random_stream(n=n)
        manifest = simple_manifest(
            calibration=(0.05, 1.2),
            tasks=(TaskWindow(TaskKind.ABDUCTION, 1.5, 2.5),),
        )
        write_session({SensorSite.THORAX: stream}, manifest, tmp_path / "sess")
        return stream, manifest

    def test_write_then_read(self, tmp_path):
        stream, manifest = self.write_simple(tmp_path)
        session = read_session(tmp_path / "sess")
        assert session.manifest == manifest
        assert_allclose(session.streams[SensorSite.THORAX].gyro, stream.gyro, rtol=1e-8)

    def test_empty_streams_refused_atomically(self, tmp_path):
        target = tmp_path / "sess"
        with pytest.raises(SessionWriteError):
            write_session({}, simple_manifest(), target)
        assert not target.exists()

    def test_manifest_stream_mismatch(self, tmp_path):
        target = tmp_path / "sess"
        manifest = simple_manifest(
            streams={SensorSite.THORAX: "thorax.csv", SensorSite.HUMERUS: "humerus.csv"}
        )
        with pytest.raises(SessionWriteError):
            write_session({SensorSite.THORAX: random_stream()}, manifest, target)
        assert not target.exists()

    def test_task_window_outside_extent(self, tmp_path):
        stream = random_stream(n=300)  # 3 s
        manifest = simple_manifest(
            calibration=(0.05, 1.2), tasks=(TaskWindow(TaskKind.ABDUCTION, 1.5, 9.0),)
        )
        write_session({SensorSite.THORAX: stream}, manifest, tmp_path / "sess")
        with pytest.raises(ValidationError):
            read_session(tmp_path / "sess")

    def test_empty_session_dir(self, tmp_path):
        with pytest.raises(ParseError):
            read_session(tmp_path)


class TestAnalysisConfig:
    def test_defaults_round_trip(self):
        cfg = AnalysisConfig()
        back = AnalysisConfig.from_dict(cfg.to_dict())
        assert back == cfg

    def test_file_round_trip(self, tmp_path):
        cfg = AnalysisConfig(
            fusion=FilterConfig(tau_accel=1.5),
            segmentation=SegmentationSettings(onset_speed=8.0),
            rome_source="forearm",
            stats=StatsSettings(sidedness="one"),
        )
        p = tmp_path / "config.json"
        write_config(p, cfg)
        assert read_config(p) == cfg

    def test_unknown_keys_rejected(self):
        d = AnalysisConfig().to_dict()
        d["segmentation"]["wavelet"] = True
        with pytest.raises(ValidationError):
            AnalysisConfig.from_dict(d)
        d2 = AnalysisConfig().to_dict()
        d2["extra_section"] = {}
        with pytest.raises(ValidationError):
            AnalysisConfig.from_dict(d2)

    def test_bad_schema(self):
        d = AnalysisConfig().to_dict()
        d["schema"] = "analysis-config/99"
        with pytest.raises(ValidationError):
            AnalysisConfig.from_dict(d)

    def test_hash_stable_and_sensitive(self):
        a = AnalysisConfig()
        b = AnalysisConfig(segmentation=SegmentationSettings(onset_speed=6.0))
        assert a.config_hash() == AnalysisConfig().config_hash()
        assert a.config_hash() != b.config_hash()

    def test_invalid_values(self):
        with pytest.raises(ValidationError):
            AnalysisConfig(rome_source="wrist")
        with pytest.raises(ValidationError):
            StatsSettings(sidedness="both")
