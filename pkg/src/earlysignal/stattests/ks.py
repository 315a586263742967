"""Two-sample Kolmogorov-Smirnov test on weighted (tied) samples.

The exact p-value is the permutation probability conditional on the pooled
tie structure: every one of the C(n1+n2, n1) ways of labelling the pooled
observations is equally likely, and the empirical CDFs are only compared at
the end of each block of tied values. Counting is done on a lattice with
Python integers, so the result is an exact rational before the final
division.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.special import kolmogorov

from .samples import EmptySampleError, TestResult, WeightedSample, common_support

EXACT_LIMIT = 10_000


def ks_numerator(wa: np.ndarray, wb: np.ndarray) -> int:
    """``D * n1 * n2`` as an integer, i.e. max |n2*A_k - n1*B_k| over blocks."""
    n1, n2 = int(wa.sum()), int(wb.sum())
    ca = np.cumsum(wa, dtype=np.int64)
    cb = np.cumsum(wb, dtype=np.int64)
    return int(np.abs(ca * n2 - cb * n1).max()) if len(ca) else 0


def exact_pvalue(pooled_blocks, n1: int, n2: int, d_num: int) -> Fraction:
    """P(D_perm * n1 * n2 >= d_num) under random relabelling of pooled units."""
    if d_num <= 0:
        return Fraction(1)
    total = math.comb(n1 + n2, n1)
    # ways[i]: labellings of the units seen so far with i of them in sample a,
    # restricted to paths that stayed strictly inside the band at each block end
    ways = [1]
    seen = 0
    for size in pooled_blocks:
        size = int(size)
        if size == 0:
            continue
        hi = min(n1, seen + size)
        nxt = [0] * (hi + 1)
        binom = [math.comb(size, t) for t in range(size + 1)]
        for i, w in enumerate(ways):
            if not w:
                continue
            for t in range(0, min(size, n1 - i) + 1):
                nxt[i + t] += w * binom[t]
        seen += size
        for i in range(hi + 1):
            if nxt[i] and abs(i * n2 - (seen - i) * n1) >= d_num:
                nxt[i] = 0
        ways = nxt
    inside = ways[n1] if len(ways) > n1 else 0
    return Fraction(total - inside, total)


def asymptotic_pvalue(d: float, n1: int, n2: int) -> float:
    """Limiting Kolmogorov distribution at ``sqrt(n1 n2 / (n1 + n2)) * D``."""
    en = n1 * n2 / (n1 + n2)
    return float(min(1.0, max(0.0, kolmogorov(math.sqrt(en) * d))))


def ks_two_sample(a: WeightedSample, b: WeightedSample, exact_limit: int = EXACT_LIMIT) -> TestResult:
    """D = max |F_a - F_b| with an exact p when n1*n2 <= ``exact_limit``."""
    _, wa, wb = common_support(a, b)
    n1, n2 = int(wa.sum()), int(wb.sum())
    if n1 == 0 or n2 == 0:
        raise EmptySampleError("empty window sample")
    d_num = ks_numerator(wa, wb)
    d = d_num / (n1 * n2)
    if n1 * n2 <= exact_limit:
        p = float(exact_pvalue(wa + wb, n1, n2, d_num))
    else:
        p = asymptotic_pvalue(d, n1, n2)
    return TestResult(d, p, n1, n2, "ks")
