import numpy as np
import pytest
from numpy.testing import assert_allclose

from shoulderkin.errors import NoMovement, NoOnset, TooShort
from shoulderkin.segment import (
    OnsetEvent,
    Repetition,
    detect_onset,
    find_repetitions,
    smooth,
    velocity,
)

RATE = 100.0


def rep_waveform(t, start, period, peak):
    """One raised-cosine repetition starting at `start`."""
    phase = (t - start) / period
    out = np.where(
        (phase >= 0) & (phase <= 1), 0.5 * peak * (1 - np.cos(2 * np.pi * phase)), 0.0
    )
    return out


def session_series(n_reps=5, peak=120.0, period=3.0, gap=1.0, lead=2.0, rate=RATE):
    duration = lead + gap + n_reps * (period + gap)
    t = np.arange(int(duration * rate) + 1) / rate
    values = np.zeros_like(t)
    for k in range(n_reps):
        values += rep_waveform(t, lead + gap + k * (period + gap), period, peak)
    return t, values


class TestSmooth:
    def test_constant_series_unchanged(self):
        t = np.arange(500) / RATE
        out = smooth(t, np.full(500, 8.0))
        assert_allclose(out, 8.0, atol=1e-12)

    def test_impulse_attenuation(self):
        t = np.arange(1001) / RATE
        v = np.zeros(1001)
        v[500] = 10.0
        out = smooth(t, v)  # 0.25 s at 100 Hz -> 25-sample window
        assert out[500] == pytest.approx(10.0 / 25.0, abs=1e-12)
        assert np.max(out) == pytest.approx(10.0 / 25.0, abs=1e-12)

    def test_white_noise_variance_reduction(self):
        rng = np.random.default_rng(101)
        t = np.arange(5000) / RATE
        noise = rng.normal(0.0, 2.0, 5000)
        out = smooth(t, noise)
        assert np.std(out[100:-100]) < 0.8

    def test_length_preserved_and_endpoints(self):
        t = np.arange(100) / RATE
        v = np.linspace(0, 10, 100)
        out = smooth(t, v)
        assert out.shape == v.shape
        # linear series: symmetric window leaves values unchanged
        assert_allclose(out, v, atol=1e-9)

    def test_window_too_small(self):
        t = np.arange(100)  # dt = 1 s, window 0.25 s -> under 2 samples
        with pytest.raises(TooShort):
            smooth(t, np.zeros(100), window_s=0.25)


class TestFindRepetitions:
    def test_flat_series_no_movement(self):
        t = np.arange(1000) / RATE
        with pytest.raises(NoMovement):
            find_repetitions(t, np.full(1000, 5.0))

    def test_five_reps_recovered(self):
        t, v = session_series(n_reps=5, peak=120.0)
        reps = find_repetitions(t, v)
        assert len(reps) == 5
        for rep in reps:
            assert rep.peak_value == pytest.approx(120.0, abs=0.5)
            assert rep.t_start < rep.t_peak < rep.t_end

    def test_close_peaks_merged(self):
        t = np.arange(int(8 * RATE)) / RATE
        v = rep_waveform(t, 3.0, 1.0, 100.0) + rep_waveform(t, 3.5, 1.0, 80.0)
        reps = find_repetitions(t, v)
        assert len(reps) == 1
        assert reps[0].peak_value >= 100.0

    def test_disjoint_and_ordered(self):
        t, v = session_series(n_reps=4)
        reps = find_repetitions(t, v)
        for a, b in zip(reps, reps[1:]):
            assert a.i_end < b.i_start
            assert a.t_peak < b.t_peak

    def test_translation_stability(self):
        t, v = session_series(n_reps=3)
        reps = find_repetitions(t, v)
        reps_shifted = find_repetitions(t + 17.3, v)
        assert [r.i_start for r in reps] == [r.i_start for r in reps_shifted]
        assert [r.i_end for r in reps] == [r.i_end for r in reps_shifted]

    def test_too_short(self):
        t = np.arange(100) / RATE  # 1 s
        with pytest.raises(TooShort):
            find_repetitions(t, np.zeros(100))

    def test_deterministic(self):
        t, v = session_series(n_reps=5)
        assert find_repetitions(t, v) == find_repetitions(t, v)


class TestDetectOnset:
    def one_rep(self, peak=120.0, period=3.0):
        t, v = session_series(n_reps=1, peak=peak, period=period)
        reps = find_repetitions(t, v)
        assert len(reps) == 1
        return t, v, reps[0]

    def test_ramp_onset_at_start(self):
        t = np.arange(int(10 * RATE)) / RATE
        v = np.where(t >= 4.0, 30.0 * (t - 4.0), 0.0)
        v = np.minimum(v, 90.0)
        i0 = int(4.0 * RATE)
        rep = Repetition(
            index=0,
            i_start=i0,
            i_peak=int(7.0 * RATE),
            i_end=int(9.0 * RATE),
            t_start=4.0,
            t_peak=7.0,
            t_end=9.0,
            peak_value=90.0,
        )
        ev = detect_onset(t, v, rep, v_on=5.0)
        assert abs(ev.t_onset - 4.0) <= 1.0 / RATE + 1e-12

    def test_subthreshold_wobble_no_onset(self):
        t, v, rep = self.one_rep()
        wobble = 0.5 * np.sin(2 * np.pi * 0.5 * t)  # max speed ~1.6 deg/s
        with pytest.raises(NoOnset):
            detect_onset(t, wobble, rep, v_on=5.0)

    def test_injected_delay_recovered(self):
        # same waveform on both series, one shifted 0.4 s later
        t, v = session_series(n_reps=1, peak=100.0, period=3.0)
        v_late = np.zeros_like(v)
        shift = int(0.4 * RATE)
        v_late[shift:] = v[:-shift]
        rep = find_repetitions(t, np.maximum(v, v_late))[0]
        early = detect_onset(t, v, rep, label="humerus")
        late = detect_onset(t, v_late, rep, label="scapula")
        assert late.t_onset - early.t_onset == pytest.approx(0.4, abs=0.05)

    def test_attain_and_activation(self):
        t, v, rep = self.one_rep(peak=120.0, period=3.0)
        ev = detect_onset(t, v, rep)
        assert ev.t_onset < ev.t_attain <= rep.t_peak
        # raised cosine reaches 95% amplitude at ~0.428 of its period
        expected_attain = rep.t_peak - rep_period_95_offset(3.0)
        assert ev.t_attain == pytest.approx(expected_attain, abs=0.05)
        assert ev.activation_time == pytest.approx(ev.t_attain - ev.t_onset)

    def test_onset_monotone_in_threshold(self):
        t, v, rep = self.one_rep()
        onsets = [detect_onset(t, v, rep, v_on=vo).t_onset for vo in (2.0, 5.0, 10.0, 20.0)]
        assert onsets == sorted(onsets)

    def test_rep_outside_series(self):
        t, v, rep = self.one_rep()
        with pytest.raises(ValueError):
            detect_onset(t[:100], v[:100], rep)


def rep_period_95_offset(period):
    """Time from the 95% crossing to the peak for a raised cosine."""
    return period / 2.0 - period * np.arccos(1 - 2 * 0.95) / (2 * np.pi)


class TestVelocity:
    def test_linear_ramp(self):
        t = np.arange(200) / RATE
        v = 12.0 * t
        assert_allclose(velocity(t, v), 12.0, atol=1e-9)
