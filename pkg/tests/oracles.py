"""Independent brute-force oracles used by the test suite.

Deliberately naive re-implementations: rotation matrices assembled from
first principles, rank tests enumerated over every split / sign vector.
Nothing here imports the production code paths it is used to check.
"""

from itertools import combinations, product

import numpy as np


# --- rotation oracle ----------------------------------------------------------

def quat_to_matrix(w, x, y, z):
    """Rotation matrix of a unit quaternion, assembled independently."""
    return np.array(
        [
            [
                w * w + x * x - y * y - z * z,
                2 * (x * y - w * z),
                2 * (x * z + w * y),
            ],
            [
                2 * (x * y + w * z),
                w * w - x * x + y * y - z * z,
                2 * (y * z - w * x),
            ],
            [
                2 * (x * z - w * y),
                2 * (y * z + w * x),
                w * w - x * x - y * y + z * z,
            ],
        ]
    )


def random_unit_quaternion(rng):
    """Uniform random rotation as (w, x, y, z) floats."""
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return tuple(float(c) for c in v)


def matrix_angle_deg(r):
    """Geodesic rotation angle of a rotation matrix via its trace."""
    c = (np.trace(r) - 1.0) / 2.0
    return float(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))


# --- rank-test oracles -----------------------------------------------------------

def midranks(values):
    """Mid-ranks (ties averaged), 1-based."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def mann_whitney_bruteforce(x, y):
    """Exact Mann-Whitney by enumerating every C(n+m, n) rank split.

    The observed statistic is counted directly from pairwise wins, so ties
    inside one group are fine; ties across groups are not (the positional
    null would be ambiguous). Returns (u_min, p_one_sided, p_two_sided).
    """
    n, m = len(x), len(y)
    assert not set(x) & set(y), "oracle requires no cross-group ties"
    u1 = sum(1 for a in x for b in y if a > b)
    u_min = min(u1, n * m - u1)

    total = 0
    at_most = 0
    positions = range(1, n + m + 1)
    for subset in combinations(positions, n):
        u = sum(subset) - n * (n + 1) / 2
        total += 1
        if u <= u_min:
            at_most += 1
    p_one = at_most / total
    return u_min, p_one, min(1.0, 2.0 * p_one)


def wilcoxon_bruteforce(diffs):
    """Exact signed-rank test by enumerating all 2^n sign vectors.

    Zero differences must already be removed. Mid-ranks are used, so the
    enumeration conditions on the observed tie pattern. Returns
    (w_min, p_one_sided, p_two_sided).
    """
    d = [v for v in diffs if v != 0]
    n = len(d)
    assert n > 0
    ranks = midranks([abs(v) for v in d])
    w_plus = sum(r for r, v in zip(ranks, d) if v > 0)
    w_minus = sum(r for r, v in zip(ranks, d) if v < 0)
    w_min = min(w_plus, w_minus)

    at_most = 0
    total = 0
    for signs in product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        total += 1
        if w <= w_min:
            at_most += 1
    p_one = at_most / total
    return w_min, p_one, min(1.0, 2.0 * p_one)
