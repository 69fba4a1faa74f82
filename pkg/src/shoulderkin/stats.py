"""Descriptive statistics, exact nonparametric tests and cohort tables.

Small enrolled groups make large-sample approximations questionable, so
both rank tests carry a fully enumerated null distribution:

* Mann-Whitney U: exact over all C(n+m, n) assignments of the pooled
  rank positions while ``n + m <= 20`` and no value appears in both
  groups (ties inside one group keep U integer and the positional null
  well defined); otherwise a tie-corrected, continuity-corrected normal
  approximation.
* Wilcoxon signed rank: exact over all 2^n sign assignments while
  ``n <= 25``; tied absolute differences keep the exact path, with the
  enumeration conditioned on the observed mid-rank pattern. Zero
  differences are dropped and counted.

The enumerations use integer dynamic programming equivalent to walking
every assignment, so exact p-values are rationals evaluated without
rounding beyond the final division.

Reported p-values: ``p_two_sided = min(1, 2 * p_one_sided)``, where the
one-sided value is the tail in the direction the data lean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .errors import (
    AllZeroDifferences,
    EmptyGroup,
    EmptySample,
    LengthMismatch,
    TooFew,
    TooLarge,
)

#: declared exact-enumeration bounds
MAX_EXACT_U = 20  # n + m
MAX_EXACT_SIGNED_RANK = 25  # n

PARAMETER_UNITS = {
    "rom_elevation": "deg",
    "rom_abduction": "deg",
    "rom_scapula": "deg",
    "activation_scapula": "s",
    "activation_humerus": "s",
    "onset_lead_scapula": "s",
    "shr_ratio": "",
}


@dataclass(frozen=True)
class SampleVector:
    """A labelled sample of finite reals."""

    label: str
    values: tuple[float, ...]
    unit: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError(f"sample {self.label!r} contains a non-finite value")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TestResult:
    """Outcome of a rank test; both sidedness variants are always surfaced."""

    test: str
    statistic: float
    n: int
    m: int | None
    method: str  # "exact" | "normal-approx"
    sidedness: str  # "one" | "two"
    p: float
    p_one_sided: float
    p_two_sided: float
    ties: bool
    zeros_dropped: int = 0


def _values(v) -> tuple[float, ...]:
    if isinstance(v, SampleVector):
        return v.values
    return tuple(float(x) for x in v)


def mean_sd(v, convention: str = "sample") -> tuple[float, float]:
    """Arithmetic mean and standard deviation.

    ``convention`` selects the divisor: "sample" (n-1) or "population" (n).
    """
    values = _values(v)
    n = len(values)
    if n < 2:
        raise TooFew(f"need at least 2 values for a standard deviation, got {n}")
    if convention not in ("sample", "population"):
        raise ValueError(f"unknown SD convention {convention!r}")
    mean = sum(values) / n
    ss = sum((x - mean) ** 2 for x in values)
    var = ss / (n - 1) if convention == "sample" else ss / n
    return mean, math.sqrt(var)


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties averaged."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _tie_term(values: Sequence[float]) -> float:
    """Sum of t^3 - t over groups of tied values."""
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return float(sum(c ** 3 - c for c in counts.values() if c > 1))


# --- exact null distributions ---------------------------------------------------


@lru_cache(maxsize=None)
def _u_counts(n: int, m: int) -> tuple[int, ...]:
    """counts[u] = number of the C(n+m, n) assignments with U1 = u."""
    if n == 0 or m == 0:
        return (1,)
    with_y_largest = _u_counts(n, m - 1)  # largest pooled rank in y: U unchanged
    with_x_largest = _u_counts(n - 1, m)  # largest pooled rank in x: U gains m
    out = [0] * (n * m + 1)
    for u in range(n * (m - 1) + 1):
        out[u] += with_y_largest[u]
    for u in range((n - 1) * m + 1):
        out[u + m] += with_x_largest[u]
    return tuple(out)


def _signed_rank_counts(ranks: Sequence[float]) -> tuple[int, ...]:
    """counts[s] over doubled rank sums for all 2^n sign assignments."""
    doubled = [int(round(2 * r)) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for d in doubled:
        for s in range(total, d - 1, -1):
            if counts[s - d]:
                counts[s] += counts[s - d]
    return tuple(counts)


@dataclass(frozen=True)
class RankDistribution:
    """Exact null PMF of a rank statistic under equiprobable assignments."""

    statistic: str
    support: tuple[float, ...]
    counts: tuple[int, ...]
    total: int

    def pmf(self) -> list[float]:
        return [c / self.total for c in self.counts]

    def prob_at_most(self, value: float) -> float:
        acc = 0
        for s, c in zip(self.support, self.counts):
            if s <= value + 1e-12:
                acc += c
        return acc / self.total


def exact_u_distribution(n: int, m: int) -> RankDistribution:
    """Exact distribution of the Mann-Whitney U1 statistic (tie-free)."""
    if n < 1 or m < 1:
        raise EmptySample("both groups must be nonempty")
    if n + m > MAX_EXACT_U:
        raise TooLarge(f"exact U distribution limited to n + m <= {MAX_EXACT_U}")
    counts = _u_counts(n, m)
    return RankDistribution(
        statistic="U",
        support=tuple(float(u) for u in range(n * m + 1)),
        counts=counts,
        total=sum(counts),
    )


def exact_signed_rank_distribution(
    n: int | None = None, ranks: Sequence[float] | None = None
) -> RankDistribution:
    """Exact distribution of W+ over sign assignments.

    Pass ``n`` for the tie-free ranks 1..n, or explicit (mid-)ranks to
    condition on an observed tie pattern.
    """
    if ranks is None:
        if n is None or n < 1:
            raise EmptySample("need a positive n or explicit ranks")
        ranks = [float(i) for i in range(1, n + 1)]
    ranks = list(ranks)
    if len(ranks) > MAX_EXACT_SIGNED_RANK:
        raise TooLarge(
            f"exact signed-rank distribution limited to n <= {MAX_EXACT_SIGNED_RANK}"
        )
    counts = _signed_rank_counts(ranks)
    return RankDistribution(
        statistic="W+",
        support=tuple(s / 2.0 for s in range(len(counts))),
        counts=counts,
        total=2 ** len(ranks),
    )


# --- tests -------------------------------------------------------------------------


def mann_whitney_u(x, y, sidedness: str = "two", method: str = "auto") -> TestResult:
    """Mann-Whitney U test of two independent samples.

    The statistic is ``min(U1, U2)`` with ties counted one half via
    mid-ranks. Exact enumeration applies for tie-free pooled samples with
    ``n + m <= 20``; otherwise (or on request) a tie-corrected normal
    approximation with continuity correction.
    """
    xv, yv = _values(x), _values(y)
    n, m = len(xv), len(yv)
    if n == 0 or m == 0:
        raise EmptySample("Mann-Whitney requires two nonempty samples")
    if sidedness not in ("one", "two"):
        raise ValueError(f"unknown sidedness {sidedness!r}")

    pooled = list(xv) + list(yv)
    ranks = midranks(pooled)
    r1 = sum(ranks[:n])
    u1 = r1 - n * (n + 1) / 2.0
    u_min = min(u1, n * m - u1)
    ties = len(set(pooled)) < n + m
    # ties within one group leave every pairwise win unambiguous and keep U
    # integer; only ties across the groups force the approximation
    cross_ties = bool(set(xv) & set(yv))

    exact_possible = (n + m <= MAX_EXACT_U) and not cross_ties
    if method == "auto":
        use_exact = exact_possible
    elif method == "exact":
        if not exact_possible:
            raise TooLarge(
                "exact Mann-Whitney requires no cross-group ties and "
                f"n + m <= {MAX_EXACT_U}"
            )
        use_exact = True
    elif method == "normal":
        use_exact = False
    else:
        raise ValueError(f"unknown method {method!r}")

    if use_exact:
        counts = _u_counts(n, m)
        at_most = sum(counts[: int(round(u_min)) + 1])
        total = sum(counts)
        p_one = at_most / total
    else:
        big_n = n + m
        var = (n * m / 12.0) * (big_n + 1 - _tie_term(pooled) / (big_n * (big_n - 1)))
        if var <= 0.0:
            p_one = 1.0  # every pooled value identical: no information
        else:
            z = (u_min + 0.5 - n * m / 2.0) / math.sqrt(var)
            p_one = _norm_cdf(z)
    p_two = min(1.0, 2.0 * p_one)
    return TestResult(
        test="mann-whitney-u",
        statistic=u_min,
        n=n,
        m=m,
        method="exact" if use_exact else "normal-approx",
        sidedness=sidedness,
        p=p_two if sidedness == "two" else p_one,
        p_one_sided=p_one,
        p_two_sided=p_two,
        ties=ties,
    )


def wilcoxon_signed_rank(
    before, after, sidedness: str = "two", method: str = "auto"
) -> TestResult:
    """Wilcoxon signed-rank test of paired samples.

    Differences are ``after - before``; zero differences are dropped and
    counted. The statistic is ``min(W+, W-)`` on mid-ranked absolute
    differences. Exact enumeration applies for ``n <= 25`` (conditioning
    on the observed tie pattern); beyond that a tie-corrected normal
    approximation with continuity correction.
    """
    bv, av = _values(before), _values(after)
    if len(bv) != len(av):
        raise LengthMismatch(f"paired samples differ in length: {len(bv)} vs {len(av)}")
    if len(bv) == 0:
        raise EmptySample("Wilcoxon requires nonempty paired samples")
    if sidedness not in ("one", "two"):
        raise ValueError(f"unknown sidedness {sidedness!r}")

    diffs = [a - b for b, a in zip(bv, av)]
    nonzero = [d for d in diffs if d != 0.0]
    zeros_dropped = len(diffs) - len(nonzero)
    if not nonzero:
        raise AllZeroDifferences("every paired difference is zero")
    n = len(nonzero)
    abs_d = [abs(d) for d in nonzero]
    ranks = midranks(abs_d)
    w_plus = sum(r for r, d in zip(ranks, nonzero) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, nonzero) if d < 0)
    w_min = min(w_plus, w_minus)
    ties = len(set(abs_d)) < n

    exact_possible = n <= MAX_EXACT_SIGNED_RANK
    if method == "auto":
        use_exact = exact_possible
    elif method == "exact":
        if not exact_possible:
            raise TooLarge(
                f"exact signed-rank enumeration limited to n <= {MAX_EXACT_SIGNED_RANK}"
            )
        use_exact = True
    elif method == "normal":
        use_exact = False
    else:
        raise ValueError(f"unknown method {method!r}")

    if use_exact:
        counts = _signed_rank_counts(ranks)
        doubled_w = int(round(2 * w_min))
        at_most = sum(counts[: doubled_w + 1])
        p_one = at_most / 2 ** n
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(abs_d) / 48.0
        if var <= 0.0:
            p_one = 1.0
        else:
            z = (w_min + 0.5 - mu) / math.sqrt(var)
            p_one = _norm_cdf(z)
    p_two = min(1.0, 2.0 * p_one)
    return TestResult(
        test="wilcoxon-signed-rank",
        statistic=w_min,
        n=n,
        m=None,
        method="exact" if use_exact else "normal-approx",
        sidedness=sidedness,
        p=p_two if sidedness == "two" else p_one,
        p_one_sided=p_one,
        p_two_sided=p_two,
        ties=ties,
        zeros_dropped=zeros_dropped,
    )


# --- cohort tables ---------------------------------------------------------------------


@dataclass(frozen=True)
class CohortRecord:
    """One analyzed session, reduced to its scalar parameters."""

    subject: str
    group: str  # "AC" | "HC"
    timepoint: str | None  # "T0" | "T1" | None
    values: Mapping[str, float | None]

    def value(self, parameter: str) -> float | None:
        return self.values.get(parameter)


@dataclass(frozen=True)
class ColumnSpec:
    heading: str
    parameter: str
    timepoint: str | None


@dataclass(frozen=True)
class TableRow:
    subject: str
    values: tuple[float | None, ...]


@dataclass(frozen=True)
class CohortTable:
    table_id: str
    title: str
    group: str
    subject_heading: str
    columns: tuple[ColumnSpec, ...]
    rows: tuple[TableRow, ...]
    footer_mean: tuple[float | None, ...]
    footer_sd: tuple[float | None, ...]
    sd_convention: str


@dataclass(frozen=True)
class GroupSummary:
    """A group-level mean +/- SD outside the per-subject tables."""

    summary_id: str
    description: str
    n: int | None
    mean: float
    sd: float | None
    recomputed: bool = True


@dataclass(frozen=True)
class BatteryEntry:
    test_id: str
    parameter: str
    comparison: str
    result: TestResult


@dataclass(frozen=True)
class CohortReport:
    """Everything needed to render the cohort result tables."""

    config_hash: str
    session_ids: tuple[str, ...]
    tables: tuple[CohortTable, ...]
    summaries: tuple[GroupSummary, ...]
    tests: tuple[BatteryEntry, ...]
    notes: tuple[str, ...]
    schema: str = "cohort-report/1"


DEFAULT_SD_CONVENTIONS = {
    "rom_ac": "population",
    "rom_hc": "sample",
    "roms_ac": "sample",
    "act_ac": "sample",
}

_TABLE_LAYOUTS = (
    (
        "rom_ac",
        "Range of motion in elevation and abduction, patient group (T0 vs T1)",
        "AC",
        "Patient",
        (
            ("ROME T0 (deg)", "rom_elevation", "T0"),
            ("ROME T1 (deg)", "rom_elevation", "T1"),
            ("ROMa T0 (deg)", "rom_abduction", "T0"),
            ("ROMa T1 (deg)", "rom_abduction", "T1"),
        ),
    ),
    (
        "rom_hc",
        "Range of motion in elevation and abduction, healthy controls",
        "HC",
        "Subject",
        (
            ("ROME (deg)", "rom_elevation", None),
            ("ROMa (deg)", "rom_abduction", None),
        ),
    ),
    (
        "roms_ac",
        "Scapular range of motion in abduction, patient group (T0 vs T1)",
        "AC",
        "Patient",
        (
            ("ROMs T0 (deg)", "rom_scapula", "T0"),
            ("ROMs T1 (deg)", "rom_scapula", "T1"),
        ),
    ),
    (
        "act_ac",
        "Activation times of scapula and humerus in abduction, patient group",
        "AC",
        "Patient",
        (
            ("Scapula T0 (s)", "activation_scapula", "T0"),
            ("Scapula T1 (s)", "activation_scapula", "T1"),
            ("Humerus T0 (s)", "activation_humerus", "T0"),
            ("Humerus T1 (s)", "activation_humerus", "T1"),
        ),
    ),
)

_BATTERY_PARAMETERS = (
    "rom_elevation",
    "rom_abduction",
    "rom_scapula",
    "activation_scapula",
    "activation_humerus",
)

_HC_SUMMARY_PARAMETERS = (
    ("rom_scapula", "Scapular range of motion in abduction, healthy controls (deg)"),
    ("activation_scapula", "Scapula activation time, healthy controls (s)"),
    ("activation_humerus", "Humerus activation time, healthy controls (s)"),
)


def _subject_sort_key(subject: str):
    return (0, int(subject)) if subject.isdigit() else (1, subject)


def _pick(records: Sequence[CohortRecord], group: str, timepoint: str | None):
    index: dict[str, CohortRecord] = {}
    for r in records:
        if r.group == group and r.timepoint == timepoint:
            index[r.subject] = r
    return index


def _footer(column_values: Sequence[float | None], convention: str):
    present = [v for v in column_values if v is not None]
    if not present:
        return None, None
    if len(present) == 1:
        return present[0], None
    return mean_sd(present, convention)


def cohort_tables(
    records: Iterable[CohortRecord],
    sd_conventions: Mapping[str, str] | None = None,
    extra_summaries: Sequence[GroupSummary] = (),
    notes: Sequence[str] = (),
    config_hash: str = "",
) -> CohortReport:
    """Build the cohort report: per-subject tables, footers and test battery.

    The battery compares patients with controls (Mann-Whitney, at T0 and
    T1) and patients against themselves pre/post treatment (Wilcoxon,
    paired by subject) for every parameter with data on both sides.
    """
    records = list(records)
    if not records:
        raise EmptyGroup("no sessions to tabulate")
    conventions = dict(DEFAULT_SD_CONVENTIONS)
    if sd_conventions:
        conventions.update(sd_conventions)

    by_cell = {
        ("AC", "T0"): _pick(records, "AC", "T0"),
        ("AC", "T1"): _pick(records, "AC", "T1"),
        ("HC", None): _pick(records, "HC", None),
    }

    tables = []
    for table_id, title, group, subject_heading, layout in _TABLE_LAYOUTS:
        subjects = sorted(
            {s for (g, _), idx in by_cell.items() if g == group for s in idx},
            key=_subject_sort_key,
        )
        columns = tuple(ColumnSpec(*c) for c in layout)
        rows = []
        for s in subjects:
            vals = []
            for col in columns:
                rec = by_cell.get((group, col.timepoint), {}).get(s)
                vals.append(None if rec is None else rec.value(col.parameter))
            if any(v is not None for v in vals):
                rows.append(TableRow(subject=s, values=tuple(vals)))
        if not rows:
            continue
        convention = conventions.get(table_id, "sample")
        means, sds = [], []
        for ci in range(len(columns)):
            mean, sd = _footer([row.values[ci] for row in rows], convention)
            means.append(mean)
            sds.append(sd)
        tables.append(
            CohortTable(
                table_id=table_id,
                title=title,
                group=group,
                subject_heading=subject_heading,
                columns=columns,
                rows=tuple(rows),
                footer_mean=tuple(means),
                footer_sd=tuple(sds),
                sd_convention=convention,
            )
        )

    summaries = list(extra_summaries)
    hc = by_cell[("HC", None)]
    for parameter, description in _HC_SUMMARY_PARAMETERS:
        vals = [r.value(parameter) for r in hc.values()]
        vals = [v for v in vals if v is not None]
        if len(vals) >= 2:
            mean, sd = mean_sd(vals, "sample")
            summaries.append(
                GroupSummary(
                    summary_id=f"hc_{parameter}",
                    description=description,
                    n=len(vals),
                    mean=mean,
                    sd=sd,
                )
            )

    tests = []
    battery_notes: list[str] = []
    for parameter in _BATTERY_PARAMETERS:
        for timepoint in ("T0", "T1"):
            ac_vals = [
                r.value(parameter)
                for _, r in sorted(by_cell[("AC", timepoint)].items(), key=lambda kv: _subject_sort_key(kv[0]))
            ]
            hc_vals = [
                r.value(parameter)
                for _, r in sorted(hc.items(), key=lambda kv: _subject_sort_key(kv[0]))
            ]
            ac_vals = [v for v in ac_vals if v is not None]
            hc_vals = [v for v in hc_vals if v is not None]
            if ac_vals and hc_vals:
                res = mann_whitney_u(ac_vals, hc_vals)
                tests.append(
                    BatteryEntry(
                        test_id=f"mw_{parameter}_{timepoint.lower()}_vs_hc",
                        parameter=parameter,
                        comparison=f"AC-{timepoint} vs HC",
                        result=res,
                    )
                )
        paired_subjects = sorted(
            set(by_cell[("AC", "T0")]) & set(by_cell[("AC", "T1")]),
            key=_subject_sort_key,
        )
        before, after = [], []
        for s in paired_subjects:
            v0 = by_cell[("AC", "T0")][s].value(parameter)
            v1 = by_cell[("AC", "T1")][s].value(parameter)
            if v0 is not None and v1 is not None:
                before.append(v0)
                after.append(v1)
        if before:
            try:
                res = wilcoxon_signed_rank(before, after)
            except AllZeroDifferences:
                battery_notes.append(
                    f"paired test skipped for {parameter}: every T0 vs T1 "
                    "difference is zero"
                )
            else:
                tests.append(
                    BatteryEntry(
                        test_id=f"wilcoxon_{parameter}_t0_vs_t1",
                        parameter=parameter,
                        comparison="AC T0 vs T1",
                        result=res,
                    )
                )

    session_ids = tuple(
        f"{r.group}-{r.timepoint}-{r.subject}" if r.timepoint else f"{r.group}-{r.subject}"
        for r in sorted(records, key=lambda r: (r.group, r.timepoint or "", _subject_sort_key(r.subject)))
    )
    return CohortReport(
        config_hash=config_hash,
        session_ids=session_ids,
        tables=tuple(tables),
        summaries=tuple(summaries),
        tests=tuple(tests),
        notes=tuple(notes) + tuple(battery_notes),
    )
