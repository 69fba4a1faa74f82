import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from shoulderkin.anatomy import Joint, SensorSite
from shoulderkin.errors import InvalidProfile, ValidationError
from shoulderkin.fusion import GRAVITY
from shoulderkin.geom import UnitQuaternion, decompose_euler
from shoulderkin.sessionio import TaskKind
from shoulderkin.synth import (
    F95,
    GroundTruth,
    MotionProfile,
    NoiseSpec,
    SplitMix64,
    Tolerances,
    _body_rates,
    default_mounting,
    generate_truth,
    round_trip_report,
    synthesize_imu,
)


class TestSplitMix64:
    def test_known_sequence(self):
        # splitmix64 reference outputs for seed 0
        rng = SplitMix64(0)
        assert rng.next_raw() == 0xE220A8397B1DCDAF
        assert rng.next_raw() == 0x6E789E6AA1B965F4
        assert rng.next_raw() == 0x06C45D188009454F

    def test_uniform_in_unit_interval(self):
        rng = SplitMix64(42)
        vals = [rng.uniform() for _ in range(1000)]
        assert all(0.0 < v <= 1.0 for v in vals)
        assert 0.4 < np.mean(vals) < 0.6

    def test_gauss_moments(self):
        rng = SplitMix64(7)
        vals = [rng.gauss() for _ in range(20000)]
        assert abs(np.mean(vals)) < 0.03
        assert abs(np.std(vals) - 1.0) < 0.03


class TestMotionProfile:
    def test_defaults_valid(self):
        p = MotionProfile()
        assert p.task is TaskKind.ABDUCTION
        assert p.noise.silent

    def test_zero_reps_invalid(self):
        with pytest.raises(InvalidProfile):
            MotionProfile(n_reps=0)

    def test_peak_bounds(self):
        with pytest.raises(InvalidProfile):
            MotionProfile(peak_deg=190.0)
        with pytest.raises(InvalidProfile):
            MotionProfile(peak_deg=0.0)

    def test_gap_must_cover_lag(self):
        with pytest.raises(InvalidProfile):
            MotionProfile(rep_gap=0.2, scapula_lag=-0.3)

    def test_dict_round_trip(self):
        p = MotionProfile(peak_deg=100.0, seed=9, noise=NoiseSpec.nominal())
        back = MotionProfile.from_dict(p.to_dict())
        assert back == p

    def test_unknown_generator_rejected(self):
        d = MotionProfile().to_dict()
        d["generator"] = "mt19937"
        with pytest.raises(ValidationError):
            MotionProfile.from_dict(d)


class TestGenerateTruth:
    def test_single_rep_peak_at_midpoint(self):
        p = MotionProfile(n_reps=1, peak_deg=90.0)
        truth = generate_truth(p)
        ht = truth.joint_series[Joint.HUMEROTHORACIC]
        assert float(np.max(ht.a2)) == pytest.approx(90.0, abs=1e-9)
        t_peak = truth.true_repetitions[0].t_peak
        i = int(np.argmax(ht.a2))
        assert ht.t[i] == pytest.approx(t_peak, abs=1.0 / p.sample_rate)

    def test_scapular_share(self):
        p = MotionProfile(n_reps=2, peak_deg=120.0, scapula_share=1.0 / 3.0)
        truth = generate_truth(p)
        st = truth.joint_series[Joint.SCAPULOTHORACIC]
        assert float(np.max(st.a2)) == pytest.approx(40.0, abs=1e-9)

    def test_lag_shifts_true_onsets(self):
        p = MotionProfile(scapula_lag=-0.3)
        truth = generate_truth(p)
        for rep in truth.true_repetitions:
            assert rep.onset_humerus - rep.onset_scapula == pytest.approx(0.3)
            assert rep.onset_lead_scapula == pytest.approx(0.3)
            assert rep.activation_humerus == pytest.approx(F95 * p.rep_period)

    def test_truth_self_consistency(self):
        # decomposing the truth orientations reproduces the angle series
        p = MotionProfile(n_reps=2)
        truth = generate_truth(p)
        ht = truth.joint_series[Joint.HUMEROTHORACIC]
        hum = truth.segment_orientations[SensorSite.HUMERUS]
        for i in range(0, len(hum), 37):
            e = decompose_euler(hum.quat_at(i), "YXY")
            assert e.a2 == pytest.approx(ht.a2[i], abs=1e-9)

    def test_manifest_windows(self):
        p = MotionProfile()
        truth = generate_truth(p)
        m = truth.manifest
        assert m.calibration[1] <= m.tasks[0].t_start
        assert m.tasks[0].kind is TaskKind.ABDUCTION
        assert truth.t[-1] == pytest.approx(m.tasks[-1].t_end, abs=0.02)

    def test_two_block_session(self):
        elev = MotionProfile(task=TaskKind.ELEVATION, n_reps=2, peak_deg=150.0)
        abd = MotionProfile(task=TaskKind.ABDUCTION, n_reps=3, peak_deg=120.0)
        truth = generate_truth([elev, abd])
        kinds = [w.kind for w in truth.manifest.tasks]
        assert kinds == [TaskKind.ELEVATION, TaskKind.ABDUCTION]
        ht = truth.joint_series[Joint.HUMEROTHORACIC]
        w0, w1 = truth.manifest.tasks
        in_first = (ht.t >= w0.t_start) & (ht.t <= w0.t_end)
        in_second = (ht.t >= w1.t_start) & (ht.t <= w1.t_end)
        assert float(np.max(ht.a2[in_first])) == pytest.approx(150.0, abs=1e-9)
        assert float(np.max(ht.a2[in_second])) == pytest.approx(120.0, abs=1e-9)

    def test_forearm_follows_humerus(self):
        p = MotionProfile(include_forearm=True)
        truth = generate_truth(p)
        ft = truth.joint_series[Joint.FOREARM_THORACIC]
        ht = truth.joint_series[Joint.HUMEROTHORACIC]
        assert_allclose(ft.a2, ht.a2, atol=1e-12)
        assert SensorSite.FOREARM in truth.segment_orientations


class TestSynthesizeImu:
    def test_stationary_gravity_through_mounting(self):
        p = MotionProfile(n_reps=1)
        truth = generate_truth(p)
        streams = synthesize_imu(truth)
        thorax = streams[SensorSite.THORAX]
        mount = p.mounting[SensorSite.THORAX]
        expected = mount.conjugate().rotate((0.0, GRAVITY, 0.0))
        assert_allclose(thorax.accel[50], expected, atol=1e-12)
        assert_allclose(thorax.gyro[50], 0.0, atol=1e-9)

    def test_gravity_rotates_back_to_world_up(self):
        p = MotionProfile(n_reps=2)
        truth = generate_truth(p)
        streams = synthesize_imu(truth)
        hum = streams[SensorSite.HUMERUS]
        mount = p.mounting[SensorSite.HUMERUS]
        seg = truth.segment_orientations[SensorSite.HUMERUS]
        for i in range(0, len(hum), 101):
            q_sensor = seg.quat_at(i) * mount
            back = q_sensor.rotate(tuple(hum.accel[i]))
            assert_allclose(back, (0.0, GRAVITY, 0.0), atol=1e-9)

    def test_body_rates_constant_rotation(self):
        rate = 100.0
        omega = math.radians(30.0)
        t = np.arange(300) / rate
        quats = [
            UnitQuaternion.from_axis_angle((0, 1, 0), omega * ti) for ti in t
        ]
        rates = _body_rates(t, quats)
        mags = np.linalg.norm(rates, axis=1)
        assert_allclose(mags, 0.5236, atol=1e-3)
        assert_allclose(rates[10], (0.0, omega, 0.0), atol=1e-3)

    def test_seeded_determinism(self):
        p = MotionProfile(n_reps=1, noise=NoiseSpec.nominal(), seed=5)
        truth = generate_truth(p)
        a = synthesize_imu(truth, p)
        b = synthesize_imu(truth, p)
        for site in a:
            assert np.array_equal(a[site].accel, b[site].accel)
            assert np.array_equal(a[site].gyro, b[site].gyro)
            assert np.array_equal(a[site].mag, b[site].mag)

    def test_different_seed_changes_noise(self):
        truth = generate_truth(MotionProfile(n_reps=1))
        a = synthesize_imu(truth, MotionProfile(n_reps=1, noise=NoiseSpec.nominal(), seed=1))
        b = synthesize_imu(truth, MotionProfile(n_reps=1, noise=NoiseSpec.nominal(), seed=2))
        assert not np.array_equal(a[SensorSite.THORAX].accel, b[SensorSite.THORAX].accel)

    def test_silent_noise_ignores_seed(self):
        truth = generate_truth(MotionProfile(n_reps=1))
        a = synthesize_imu(truth, MotionProfile(n_reps=1, seed=1))
        b = synthesize_imu(truth, MotionProfile(n_reps=1, seed=99))
        assert np.array_equal(a[SensorSite.HUMERUS].gyro, b[SensorSite.HUMERUS].gyro)

    def test_bias_added(self):
        p = MotionProfile(n_reps=1, noise=NoiseSpec(gyro_bias=(0.01, 0.0, 0.0)))
        truth = generate_truth(p)
        streams = synthesize_imu(truth, p)
        assert np.mean(streams[SensorSite.THORAX].gyro[:, 0]) == pytest.approx(0.01, abs=1e-6)

    def test_fusion_rms_attitude_error_against_truth(self):
        from shoulderkin.fusion import OrientationSeries, attitude_error, estimate

        p = MotionProfile(noise=NoiseSpec.nominal(), seed=23)
        truth = generate_truth(p)
        streams = synthesize_imu(truth, p)
        seg = truth.segment_orientations[SensorSite.HUMERUS]
        mount = p.mounting[SensorSite.HUMERUS]
        sensor_truth = OrientationSeries(
            site="humerus",
            t=seg.t,
            quats=np.array(
                [(seg.quat_at(i) * mount).as_tuple() for i in range(len(seg))]
            ),
        )
        estimated = estimate(streams[SensorSite.HUMERUS])
        err = attitude_error(estimated, sensor_truth)
        rms = float(np.sqrt(np.mean(np.square(err))))
        assert rms < 2.0


class TestRoundTrip:
    def test_noise_free_default_profile(self):
        report = round_trip_report(MotionProfile())
        assert report.passed, report.failures()
        assert report.n_repetitions_measured == 5
        by_param = {r.parameter: r for r in report.rows}
        assert by_param["rom_abduction"].error < 1.0
        assert by_param["rom_scapula"].error < 1.0
        assert by_param["onset_lead_scapula"].error < 0.05
        assert by_param["activation_humerus"].error < 0.1

    def test_documented_noise_profile(self):
        report = round_trip_report(
            MotionProfile(noise=NoiseSpec.nominal_biased(), seed=11)
        )
        assert report.passed, report.failures()
        by_param = {r.parameter: r for r in report.rows}
        assert by_param["rom_abduction"].error < 5.0

    def test_noise_scaling_monotonicity(self):
        # doubling the noise should not much more than double the RMS error
        base = dict(n_reps=2, rep_period=2.5, sample_rate=50.0)
        errs1, errs2 = [], []
        for seed in range(20):
            r1 = round_trip_report(
                MotionProfile(noise=NoiseSpec(0.05, 0.005, 0.005), seed=seed, **base)
            )
            r2 = round_trip_report(
                MotionProfile(noise=NoiseSpec(0.10, 0.010, 0.010), seed=seed, **base)
            )
            errs1.append({r.parameter: r.error for r in r1.rows}["rom_abduction"])
            errs2.append({r.parameter: r.error for r in r2.rows}["rom_abduction"])
        rms1 = float(np.sqrt(np.mean(np.square(errs1))))
        rms2 = float(np.sqrt(np.mean(np.square(errs2))))
        assert rms2 < 2.0 * rms1 * 1.25  # statistical slack on the factor bound

    def test_zero_reps_rejected(self):
        with pytest.raises(InvalidProfile):
            round_trip_report(MotionProfile(n_reps=0))

    def test_tolerances_for_noise(self):
        assert Tolerances.for_noise(NoiseSpec.none()).rom_deg == 1.0
        assert Tolerances.for_noise(NoiseSpec.nominal()).rom_deg == 5.0
