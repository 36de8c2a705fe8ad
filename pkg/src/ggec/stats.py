"""Mean curves with 95% confidence intervals across repeated runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

Z95 = 1.96


@dataclass(frozen=True)
class Summary:
    mean: float
    ci_low: float
    ci_high: float
    n: int

    @property
    def half_width(self) -> float:
        return self.ci_high - self.mean

    def overlaps(self, other: "Summary") -> bool:
        return self.ci_low <= other.ci_high and other.ci_low <= self.ci_high


@dataclass(frozen=True)
class CurveSummary(Summary):
    generation: int = 0


def summarize(values: Sequence[float], t_interval: bool = False) -> Summary:
    """Mean with a normal-approximation (or Student t) 95% interval.

    Uses the n-1 sample standard deviation; a single value gives a
    zero-width interval.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarise an empty list")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite values must be capped before summarising")
    n = int(v.size)
    mean = float(v.mean())
    if n == 1:
        return Summary(mean, mean, mean, 1)
    sd = float(v.std(ddof=1))
    if t_interval:
        from scipy.stats import t
        crit = float(t.ppf(0.975, n - 1))
    else:
        crit = Z95
    half = crit * sd / math.sqrt(n)
    return Summary(mean, mean - half, mean + half, n)


def cap_penalties(values: Sequence[float]) -> List[float]:
    """Replace non-finite entries by 10x the largest finite magnitude in the cell.

    With no usable finite value the cap is 1.0.
    """
    v = [float(x) for x in values]
    finite = [abs(x) for x in v if math.isfinite(x)]
    cap = 10.0 * max(finite) if finite else 1.0
    if cap == 0.0:
        cap = 1.0
    return [x if math.isfinite(x) else cap for x in v]


def summarize_curves(curves: Sequence[Sequence[float]], t_interval: bool = False) -> List[CurveSummary]:
    """Per-generation summaries of equal-length per-run curves."""
    if not curves:
        raise ValueError("no curves")
    length = len(curves[0])
    if any(len(c) != length for c in curves):
        raise ValueError("curves differ in length")
    flat = cap_penalties([x for c in curves for x in c])
    capped = np.array(flat).reshape(len(curves), length).T  # generation x run
    out = []
    for gen, row in enumerate(capped):
        s = summarize(row, t_interval)
        out.append(CurveSummary(s.mean, s.ci_low, s.ci_high, s.n, generation=gen))
    return out


def best_so_far(curve: Sequence[float]) -> List[float]:
    out, best = [], math.inf
    for x in curve:
        if x < best:
            best = x
        out.append(best)
    return out


def group_summary(values_by_key: Dict[str, Sequence[float]]) -> Dict[str, Summary]:
    return {k: summarize(cap_penalties(v)) for k, v in values_by_key.items()}
