"""Confidence intervals and the few tests the estimators need."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

Z95 = 1.959963984540054


@dataclass(frozen=True)
class MeanCI:
    mean: float
    se: float
    lo: float
    hi: float
    n: int

    @property
    def half_width(self) -> float:
        return (self.hi - self.lo) / 2

    def excludes(self, value: float = 0.0) -> bool:
        return not (self.lo <= value <= self.hi)

    def as_dict(self) -> dict:
        return {"mean": self.mean, "se": self.se, "ci95": [self.lo, self.hi], "n": self.n}


def mean_ci(values, z: float = Z95) -> MeanCI:
    """Normal-approximation interval for the mean of i.i.d. replicas."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n == 0:
        return MeanCI(math.nan, math.nan, math.nan, math.nan, 0)
    m = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MeanCI(m, se, m - z * se, m + z * se, n)


def wilson_ci(successes: int, n: int, z: float = Z95) -> MeanCI:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return MeanCI(math.nan, math.nan, math.nan, math.nan, 0)
    p = successes / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # the endpoints are exact at the extremes; rounding would leave 1e-18 residue
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return MeanCI(p, math.sqrt(p * (1 - p) / n), lo, hi, n)


def two_proportion_test(k1: int, n1: int, k2: int, n2: int) -> float:
    """One-sided p-value for H1: p1 < p2 (pooled z-test)."""
    p1, p2 = k1 / n1, k2 / n2
    pool = (k1 + k2) / (n1 + n2)
    se = math.sqrt(pool * (1 - pool) * (1 / n1 + 1 / n2))
    if se == 0:
        return 1.0 if p1 >= p2 else 0.0
    return float(stats.norm.sf((p2 - p1) / se))


def equal_means_test(samples) -> float:
    """Hotelling T^2 p-value for equal means across the columns of `samples`.

    Rows are replicas; columns are correlated measurements on the same replica.
    """
    x = np.asarray(samples, dtype=float)
    n, m = x.shape
    if m < 2:
        return 1.0
    y = x[:, 1:] - x[:, :1]
    p = m - 1
    if n <= p:
        return math.nan
    ybar = y.mean(axis=0)
    cov = np.atleast_2d(np.cov(y, rowvar=False))
    t2 = float(n * ybar @ np.linalg.solve(cov, ybar))
    f = (n - p) / (p * (n - 1)) * t2
    return float(stats.f.sf(f, p, n - p))
