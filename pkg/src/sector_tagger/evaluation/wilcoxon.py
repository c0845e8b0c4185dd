"""Two-sided Wilcoxon signed-rank test for paired samples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

EXACT_MAX_N = 12


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    method: str


def signed_ranks(diffs) -> tuple[np.ndarray, np.ndarray]:
    """Mid-ranks of |d| over the non-zero differences, and their signs."""
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0]
    return rankdata(np.abs(d)), np.sign(d)


def doubled_sum_counts(ranks: np.ndarray) -> np.ndarray:
    """``counts[s]``: sign patterns whose positive ranks sum to ``s / 2``.

    Mid-ranks are half-integers, so sums are tracked on doubled ranks.
    """
    doubled = np.rint(2 * ranks).astype(np.int64)
    total = int(doubled.sum())
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled:
        counts[r:] = counts[r:] + counts[: total + 1 - r]
    return counts


def exact_p_value(ranks: np.ndarray, w_plus: float) -> float:
    """P(min(W+, W-) <= observed) over all 2^n equally likely sign patterns."""
    counts = doubled_sum_counts(ranks)
    total = len(counts) - 1
    s = np.arange(total + 1)
    observed = min(int(round(2 * w_plus)), total - int(round(2 * w_plus)))
    hits = int(counts[np.minimum(s, total - s) <= observed].sum())
    return hits / 2 ** len(ranks)


def normal_p_value(ranks: np.ndarray, w: float) -> float:
    """Normal approximation with tie-corrected variance and a continuity correction."""
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_sizes**3 - tie_sizes) / 48.0
    if var <= 0:
        return 1.0
    z = (w - mean + 0.5) / math.sqrt(var)
    return float(min(1.0, 2.0 * norm.cdf(min(z, 0.0))))


def wilcoxon_signed_rank(diffs, method: str = "auto") -> WilcoxonResult:
    """Test whether paired differences are symmetric about zero.

    Zero differences are dropped; ``method`` is ``"auto"`` (exact up to
    12 non-zero differences), ``"exact"`` or ``"normal"``.
    """
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    if len(diffs) == 0:
        raise ValueError("need at least one difference")
    ranks, signs = signed_ranks(diffs)
    n = len(ranks)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "exact")
    w_plus = float(ranks[signs > 0].sum())
    w_minus = float(ranks[signs < 0].sum())
    w = min(w_plus, w_minus)
    use_exact = method == "exact" or (method == "auto" and n <= EXACT_MAX_N)
    if use_exact:
        return WilcoxonResult(w, exact_p_value(ranks, w_plus), n, "exact")
    return WilcoxonResult(w, normal_p_value(ranks, w), n, "normal")
