"""Small Monte Carlo statistics helpers shared by the samplers and reports."""

from __future__ import annotations

import math

Z95 = 1.959963984540054  # two-sided 95% normal quantile

# chi-square critical values at significance 0.01, by degrees of freedom
CHI2_CRIT_01 = {
    1: 6.634896601021213,
    2: 9.21034037197618,
    4: 13.276704135987622,
    6: 16.811893829770927,
    8: 20.090235029663233,
    10: 23.209251158954356,
    12: 26.216967305535853,
    14: 29.141237740672796,
}


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    # rounding can push the bounds a few ulps past the point estimate at the
    # extremes (s = 0 or s = n); the interval must always contain p
    return (max(0.0, min(center - half, p)), min(1.0, max(center + half, p)))


def chi2_independence(table) -> tuple[float, int]:
    """Pearson chi-square statistic and df for an r x c contingency table."""
    rows = [list(r) for r in table]
    r, c = len(rows), len(rows[0])
    row_sums = [sum(row) for row in rows]
    col_sums = [sum(rows[i][j] for i in range(r)) for j in range(c)]
    total = sum(row_sums)
    if total == 0:
        raise ValueError("empty table")
    stat = 0.0
    for i in range(r):
        for j in range(c):
            expected = row_sums[i] * col_sums[j] / total
            if expected > 0:
                d = rows[i][j] - expected
                stat += d * d / expected
    return stat, (r - 1) * (c - 1)
