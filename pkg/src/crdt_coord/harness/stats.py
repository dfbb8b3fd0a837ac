"""Outlier filtering, normalized time, Wilcoxon signed-rank and paired effect size.

Quantiles use linear interpolation between order statistics (numpy's
default, the "type 7" rule). P-values use the normal approximation with a
continuity correction and a tie correction to the variance.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SMALL_N_NORMAL = 6  # below this many non-zero differences the approximation is not used
SMALL_N_WARN = 20  # below this the p-value is flagged as rough


@dataclass(frozen=True)
class Flagged:
    """A value with advisory flags; ``value`` is None when undefined."""

    value: Optional[float]
    flags: tuple[str, ...] = ()

    @property
    def defined(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class IqrResult:
    kept: list[float]
    removed: list[float]
    q1: float
    q3: float
    lower: float
    upper: float
    flags: tuple[str, ...] = ()


def quantile(samples: Sequence[float], q: float) -> float:
    return float(np.quantile(np.asarray(samples, dtype=float), q))


def iqr_filter(samples: Sequence[float], k: float = 1.5) -> IqrResult:
    xs = [float(x) for x in samples]
    if len(xs) < 4:
        if not xs:
            return IqrResult([], [], math.nan, math.nan, math.nan, math.nan, ("n<4",))
        q1, q3 = quantile(xs, 0.25), quantile(xs, 0.75)
        return IqrResult(xs, [], q1, q3, -math.inf, math.inf, ("n<4",))
    q1, q3 = quantile(xs, 0.25), quantile(xs, 0.75)
    iqr = q3 - q1
    lo, hi = q1 - k * iqr, q3 + k * iqr
    kept = [x for x in xs if lo <= x <= hi]
    removed = [x for x in xs if not lo <= x <= hi]
    return IqrResult(kept, removed, q1, q3, lo, hi)


def normalized_time(response_s: float, chars: int) -> Flagged:
    """Seconds per 1000 characters."""
    if chars <= 0:
        return Flagged(None, ("chars=0",))
    return Flagged(response_s / (chars / 1000.0))


@dataclass(frozen=True)
class WilcoxonResult:
    w: Optional[float]
    w_plus: float
    w_minus: float
    n: int  # non-zero differences
    z: Optional[float]
    p: Optional[float]
    flags: tuple[str, ...] = ()


def _midranks(values: Sequence[float]) -> tuple[list[float], list[int]]:
    """Ranks (1-based, ties averaged) and the sizes of the tie groups."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    ties = []
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2 + 1
        for t in range(i, j + 1):
            ranks[order[t]] = r
        ties.append(j - i + 1)
        i = j + 1
    return ranks, ties


def wilcoxon_signed_rank(pairs: Sequence[tuple[float, float]]) -> WilcoxonResult:
    diffs = [a - b for a, b in pairs if a != b]
    n = len(diffs)
    flags: list[str] = []
    if n == 0:
        return WilcoxonResult(None, 0.0, 0.0, 0, None, None, ("degenerate: all differences zero",))
    ranks, ties = _midranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    w = min(w_plus, w_minus)
    mean = n * (n + 1) / 4
    var = n * (n + 1) * (2 * n + 1) / 24 - sum(t**3 - t for t in ties) / 48
    if n < SMALL_N_NORMAL:
        flags.append(f"n={n}<{SMALL_N_NORMAL}: normal approximation not applicable")
        return WilcoxonResult(w, w_plus, w_minus, n, None, None, tuple(flags))
    if n < SMALL_N_WARN:
        flags.append(f"n={n}<{SMALL_N_WARN}: normal approximation is rough")
    if var <= 0:
        return WilcoxonResult(w, w_plus, w_minus, n, None, None, tuple(flags + ["zero variance"]))
    d = w_plus - mean
    cc = 0.5 * (1 if d > 0 else -1 if d < 0 else 0)
    z = (d - cc) / math.sqrt(var)
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2)))
    return WilcoxonResult(w, w_plus, w_minus, n, z, p, tuple(flags))


def cohens_dz(pairs: Sequence[tuple[float, float]]) -> Flagged:
    diffs = [a - b for a, b in pairs]
    if len(diffs) < 2:
        return Flagged(None, ("n<2",))
    sd = statistics.stdev(diffs)
    if sd == 0:
        return Flagged(None, ("sd=0",))
    return Flagged(statistics.fmean(diffs) / sd)


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    sd: float
    median: float
    q1: float
    q3: float
    removed_outliers: int = 0
    flags: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "n": self.n, "mean": self.mean, "sd": self.sd, "median": self.median,
            "q1": self.q1, "q3": self.q3, "removedOutliers": self.removed_outliers, "flags": list(self.flags),
        }


def summarize(samples: Sequence[float], filter_outliers: bool = True) -> SummaryStats:
    xs = [float(x) for x in samples if x is not None and not math.isnan(x)]
    res = iqr_filter(xs) if filter_outliers else IqrResult(xs, [], math.nan, math.nan, -math.inf, math.inf)
    kept = res.kept
    if not kept:
        return SummaryStats(0, math.nan, math.nan, math.nan, math.nan, math.nan, len(res.removed), res.flags)
    sd = statistics.stdev(kept) if len(kept) > 1 else 0.0
    return SummaryStats(
        n=len(kept),
        mean=statistics.fmean(kept),
        sd=sd,
        median=quantile(kept, 0.5),
        q1=quantile(kept, 0.25),
        q3=quantile(kept, 0.75),
        removed_outliers=len(xs) - len(kept),
        flags=res.flags,
    )
