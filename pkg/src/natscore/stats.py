"""Statistics kernel: Spearman rank correlation, bootstrap percentile
confidence intervals, 2x2 chi-squared tests, and Benjamini-Hochberg
false discovery rate control.

All randomized routines are bit-reproducible given (inputs, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class CorrelationResult:
    """Spearman rho with a bootstrapped percentile confidence interval."""

    rho: float
    ci_low: float
    ci_high: float
    n: int
    resamples: int
    seed: int


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    significant_after_fdr: bool = False


def average_ranks(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Ranks 1..n with tied values receiving the average of their ranks."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    sv = v[order]
    boundary = np.empty(len(v), dtype=bool)
    boundary[0] = True
    boundary[1:] = sv[1:] != sv[:-1]
    run_id = np.cumsum(boundary) - 1
    starts = np.flatnonzero(boundary)
    counts = np.diff(np.append(starts, len(v)))
    averages = starts + (counts - 1) / 2.0 + 1.0
    ranks = np.empty(len(v), dtype=float)
    ranks[order] = averages[run_id]
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks for ties.

    Equal or exactly reversed rank vectors return +/-1.0 exactly, so
    monotone transforms of the same vector correlate at exactly 1.
    Raises ValueError for length mismatch, n < 3, or a constant vector.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 3:
        raise ValueError(f"need at least 3 pairs, got {len(x)}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("correlation undefined for a constant vector")
    rx = average_ranks(x)
    ry = average_ranks(y)
    if np.array_equal(rx, ry):
        return 1.0
    if np.array_equal(rx, len(rx) + 1.0 - ry):
        return -1.0
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    rho = float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    return min(1.0, max(-1.0, rho))


def bootstrap_ci(
    pairs: Sequence[tuple[float, float]],
    resamples: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the Spearman correlation of pairs.

    Resamples whole pairs with replacement. Degenerate resamples (either
    coordinate constant) are discarded and redrawn; raises ValueError when
    fewer than resamples/2 usable resamples can be achieved.
    """
    if len(pairs) < 3:
        raise ValueError(f"need at least 3 pairs, got {len(pairs)}")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    x = np.asarray([p[0] for p in pairs], dtype=float)
    y = np.asarray([p[1] for p in pairs], dtype=float)
    n = len(x)
    rng = np.random.default_rng(seed)
    rhos: list[float] = []
    attempts = 0
    max_attempts = 10 * resamples
    while len(rhos) < resamples and attempts < max_attempts:
        attempts += 1
        idx = rng.integers(0, n, size=n)
        xs = x[idx]
        ys = y[idx]
        if np.all(xs == xs[0]) or np.all(ys == ys[0]):
            continue
        rhos.append(spearman(xs, ys))
    if len(rhos) < resamples / 2:
        raise ValueError(
            f"too few non-degenerate bootstrap resamples ({len(rhos)} of {resamples})"
        )
    lo, hi = np.percentile(rhos, [100.0 * alpha / 2.0, 100.0 * (1.0 - alpha / 2.0)])
    return float(lo), float(hi)


def chi_squared_2x2(
    a: int, b: int, c: int, d: int, yates: bool = False
) -> TestResult:
    """Chi-squared test of independence for the 2x2 table ((a, b), (c, d)).

    No continuity correction by default; pass yates=True to apply it.
    The p-value uses the exact 1-df survival function erfc(sqrt(x/2)).
    Raises ValueError for negative cells or a zero margin.
    """
    cells = (a, b, c, d)
    if any(v < 0 for v in cells):
        raise ValueError(f"cell counts must be non-negative: {cells}")
    total = a + b + c + d
    margins = (a + b, c + d, a + c, b + d)
    if any(m == 0 for m in margins):
        raise ValueError(f"zero margin in table {cells}: cannot be tested")
    expected = (
        margins[0] * margins[2] / total,
        margins[0] * margins[3] / total,
        margins[1] * margins[2] / total,
        margins[1] * margins[3] / total,
    )
    stat = 0.0
    for observed, exp in zip(cells, expected):
        dev = abs(observed - exp)
        if yates:
            dev = max(0.0, dev - 0.5)
        stat += dev * dev / exp
    p = math.erfc(math.sqrt(stat / 2.0))
    return TestResult(statistic=stat, p_value=p)


def bh_select(p_values: Iterable[float], alpha: float) -> list[bool]:
    """Benjamini-Hochberg selection at false discovery rate alpha.

    Returns one flag per input p-value (input order preserved). Flags form
    a prefix of the p-sorted order: with p(1) <= ... <= p(m) and
    k = max{i : p(i) <= i*alpha/m}, exactly the tests with p <= p(k) are
    selected (none when no such k exists).
    """
    p = list(p_values)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    for value in p:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"p-value out of [0, 1]: {value}")
    m = len(p)
    if m == 0:
        return []
    ordered = sorted(p)
    threshold = None
    for i in range(m, 0, -1):
        if ordered[i - 1] <= i * alpha / m:
            threshold = ordered[i - 1]
            break
    if threshold is None:
        return [False] * m
    return [value <= threshold for value in p]
