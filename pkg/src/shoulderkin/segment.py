"""Partition an angle series into movement repetitions and find onsets.

A repetition is one raise-and-lower excursion of the elevation trace.
Peaks are accepted above ``max(min_peak_deg, peak_fraction * global max)``
and merged under a minimum separation; each repetition then spans the
enclosing minima, with flat valleys split at their midpoint so that a
segment whose motion starts slightly early (a leading scapula) still
falls inside the repetition window.

Movement onset is a sustained angular-speed threshold crossing; the
attainment time marks 95% of the repetition's amplitude on the same
series. Velocities are central finite differences (one-sided at the
ends), intended to run on a smoothed series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoMovement, NoOnset, TooShort

#: flat-valley tolerance: absolute floor (deg) and fraction of peak height
_VALLEY_EPS_DEG = 0.5
_VALLEY_EPS_FRACTION = 0.02


@dataclass(frozen=True)
class Repetition:
    """One movement repetition; indices refer to the segmented series."""

    index: int
    i_start: int
    i_peak: int
    i_end: int
    t_start: float
    t_peak: float
    t_end: float
    peak_value: float
    valid: bool = True


@dataclass(frozen=True)
class OnsetEvent:
    """Movement onset and 95%-amplitude attainment for one series."""

    label: str
    t_onset: float
    t_attain: float

    @property
    def activation_time(self) -> float:
        """Seconds from onset to 95% of the repetition amplitude."""
        return self.t_attain - self.t_onset


def smooth(t, values, window_s: float = 0.25) -> np.ndarray:
    """Centered moving average; endpoints shrink the window symmetrically.

    Length-preserving. The window is converted to samples with the median
    time step; it must span at least 2 samples.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        raise TooShort("cannot smooth a series of fewer than 2 samples", stage="segment")
    dt = float(np.median(np.diff(t)))
    n_window = int(round(window_s / dt))
    if n_window < 2:
        raise TooShort(
            f"smoothing window {window_s} s spans fewer than 2 samples at dt={dt}",
            stage="segment",
        )
    half = n_window // 2
    csum = np.concatenate(([0.0], np.cumsum(values)))
    out = np.empty(n)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = (csum[i + h + 1] - csum[i - h]) / (2 * h + 1)
    return out


def velocity(t, values) -> np.ndarray:
    """Angular speed by central differences, one-sided at the ends."""
    return np.gradient(np.asarray(values, dtype=float), np.asarray(t, dtype=float))


def find_repetitions(
    t,
    values,
    min_peak_deg: float = 20.0,
    peak_fraction: float = 0.5,
    min_separation_s: float = 1.0,
) -> list[Repetition]:
    """Detect movement repetitions on an elevation-like angle series.

    Deterministic: ties are broken toward the earlier sample. Raises
    ``NoMovement`` when no peak clears the detection threshold.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2 or t[-1] - t[0] < 3.0:
        raise TooShort("series shorter than 3 s cannot be segmented", stage="segment")

    threshold = max(min_peak_deg, peak_fraction * float(np.max(values)))
    above = np.flatnonzero(values >= threshold)
    if above.size == 0:
        raise NoMovement(f"no sample reaches the {threshold:.1f} deg repetition threshold")

    # one candidate peak per contiguous above-threshold region
    breaks = np.flatnonzero(np.diff(above) > 1)
    region_starts = np.concatenate(([0], breaks + 1))
    region_ends = np.concatenate((breaks, [above.size - 1]))
    candidates = []
    for rs, re in zip(region_starts, region_ends):
        a, b = int(above[rs]), int(above[re])
        candidates.append(a + int(np.argmax(values[a : b + 1])))

    # enforce the minimum peak separation, keeping the higher peak
    accepted: list[int] = []
    for p in sorted(candidates, key=lambda i: (-values[i], i)):
        if all(abs(t[p] - t[q]) >= min_separation_s for q in accepted):
            accepted.append(p)
    accepted.sort()

    reps: list[Repetition] = []
    prev_split = -1
    for k, p in enumerate(accepted):
        lo = _leading_bound(values, p) if k == 0 else prev_split + 1
        if k + 1 < len(accepted):
            hi = _valley_split(values, p, accepted[k + 1])
            prev_split = hi
        else:
            hi = _trailing_bound(values, p, n)
        if lo < p < hi:
            reps.append(
                Repetition(
                    index=len(reps),
                    i_start=lo,
                    i_peak=p,
                    i_end=hi,
                    t_start=float(t[lo]),
                    t_peak=float(t[p]),
                    t_end=float(t[hi]),
                    peak_value=float(values[p]),
                )
            )
    if not reps:
        raise NoMovement("no repetition with a proper rise and fall around its peak")
    return reps


def _quiet_eps(peak_value: float, valley_min: float) -> float:
    return max(_VALLEY_EPS_DEG, _VALLEY_EPS_FRACTION * (peak_value - valley_min))


def _quiet_run(values, a: int, b: int, eps_ref_peak: float) -> tuple[int, int]:
    """Contiguous run of near-minimum samples around the argmin of [a, b]."""
    seg = values[a : b + 1]
    m = float(np.min(seg))
    amin = a + int(np.argmin(seg))
    eps = _quiet_eps(eps_ref_peak, m)
    lo = amin
    while lo > a and values[lo - 1] <= m + eps:
        lo -= 1
    hi = amin
    while hi < b and values[hi + 1] <= m + eps:
        hi += 1
    return lo, hi

def _valley_split(values, p0: int, p1: int) -> int:
    lo, hi = _quiet_run(values, p0, p1, min(values[p0], values[p1]))
    return (lo + hi) // 2


def _leading_bound(values, p: int) -> int:
    lo, _ = _quiet_run(values, 0, p, values[p])
    return lo


def _trailing_bound(values, p: int, n: int) -> int:
    _, hi = _quiet_run(values, p, n - 1, values[p])
    return hi


def detect_onset(
    t,
    values,
    rep: Repetition,
    v_on: float = 5.0,
    hold_s: float = 0.1,
    label: str = "",
) -> OnsetEvent:
    """Movement onset inside a repetition window.

    Onset is the first time in ``[t_start, t_peak]`` at which the angular
    speed exceeds ``v_on`` continuously for at least ``hold_s``; the
    attainment time is the first sample at or above 95% of the window's
    amplitude over the ``t_start`` baseline. Both are computed on the
    series passed in, which may differ from the series that produced the
    repetition (e.g. scapular angles inside humeral repetitions).
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if rep.i_start < 0 or rep.i_end >= len(values):
        raise ValueError("repetition lies outside the series extent")

    speed = velocity(t, values)
    fast = speed > v_on

    i = rep.i_start
    t_onset = None
    while i <= rep.i_peak:
        if not fast[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(values) and fast[j + 1]:
            j += 1
        if t[j] - t[i] >= hold_s:
            t_onset = float(t[i])
            break
        i = j + 1
    if t_onset is None:
        raise NoOnset(
            f"angular speed never sustains {v_on} deg/s for {hold_s} s "
            f"in repetition {rep.index}"
        )

    window = values[rep.i_start : rep.i_end + 1]
    baseline = float(values[rep.i_start])
    target = baseline + 0.95 * (float(np.max(window)) - baseline)
    rel = np.flatnonzero(window >= target)
    i_attain = rep.i_start + int(rel[0])
    t_attain = float(t[i_attain])
    if t_attain <= t_onset:
        raise NoOnset(
            f"repetition {rep.index} reaches 95% amplitude before any qualified onset"
        )
    return OnsetEvent(label=label, t_onset=t_onset, t_attain=t_attain)
