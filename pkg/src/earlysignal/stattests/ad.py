"""k-sample Anderson-Darling test (k = 2) with the midrank tie correction.

The statistic follows Scholz & Stephens (1987): the midrank version of
A2_akN is computed straight from the pooled weights, then standardized
with its null mean (k - 1) and variance. p-values come from the published
k-sample significance table, interpolated and clamped to [0.001, 0.25].
"""
from __future__ import annotations

import math

import numpy as np

from .samples import EmptySampleError, TestResult, WeightedSample, common_support

SIGNIFICANCE = np.array([0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.001])
_B0 = np.array([0.675, 1.281, 1.645, 1.96, 2.326, 2.573, 3.085])
_B1 = np.array([-0.245, 0.25, 0.678, 1.149, 1.822, 2.364, 3.615])
_B2 = np.array([-0.105, -0.305, -0.362, -0.391, -0.396, -0.345, -0.154])

P_CEILING = float(SIGNIFICANCE.max())
P_FLOOR = float(SIGNIFICANCE.min())


def critical_values(k: int = 2) -> np.ndarray:
    m = k - 1
    return _B0 + _B1 / math.sqrt(m) + _B2 / m


CRITICAL = critical_values(2)
# quadratic in T fitted to log(significance) through the seven knots
_LOGP_QUAD = np.polyfit(CRITICAL, np.log(SIGNIFICANCE), 2)


def ad_pvalue(t: float, interpolation: str = "quadratic") -> float:
    """Approximate p for a standardized two-sample statistic ``t``.

    ``"quadratic"`` fits log(p) as a quadratic in ``t`` over the table (the
    usual approximation); ``"linear"`` interpolates log(p) piecewise between
    neighbouring knots and is exact at each tabulated critical value.
    Outside the table, and for any interpolated value beyond it, the result
    is clamped to [0.001, 0.25].
    """
    if not math.isfinite(t):
        raise ValueError("statistic must be finite")
    if t < CRITICAL[0]:
        return P_CEILING
    if t > CRITICAL[-1]:
        return P_FLOOR
    if interpolation == "quadratic":
        p = math.exp(float(np.polyval(_LOGP_QUAD, t)))
    elif interpolation == "linear":
        p = math.exp(float(np.interp(t, CRITICAL, np.log(SIGNIFICANCE))))
    else:
        raise ValueError(f"unknown interpolation {interpolation!r}")
    return min(P_CEILING, max(P_FLOOR, p))


def _variance_terms(n: np.ndarray, N: int) -> float:
    k = len(n)
    H = float((1.0 / n).sum())
    # h = sum_{i=1}^{N-1} 1/i ; g = sum_{i=1}^{N-2} sum_{j=i+1}^{N-1} 1/((N-i) j)
    inv = 1.0 / np.arange(1, N)
    h = float(inv.sum())
    tail = np.cumsum(inv[::-1])[::-1]  # tail[i-1] = sum_{j=i}^{N-1} 1/j
    i = np.arange(1, N - 1)
    g = float((tail[i] / (N - i)).sum())
    a = (4 * g - 6) * (k - 1) + (10 - 6 * g) * H
    b = (2 * g - 4) * k**2 + 8 * h * k + (2 * g - 14 * h - 4) * H - 8 * h + 4 * g - 6
    c = (6 * h + 2 * g - 2) * k**2 + (4 * h - 4 * g + 6) * k + (2 * h - 6) * H + 4 * h
    d = (2 * h + 6) * k**2 - 4 * h * k
    return (a * N**3 + b * N**2 + c * N + d) / ((N - 1.0) * (N - 2.0) * (N - 3.0))


def ad_statistic(wa: np.ndarray, wb: np.ndarray) -> tuple[float, float]:
    """(A2_akN, standardized T) for two weight vectors on a shared support."""
    wa = np.asarray(wa, dtype=np.int64)
    wb = np.asarray(wb, dtype=np.int64)
    pooled = wa + wb
    keep = pooled > 0
    lj = pooled[keep].astype(float)
    N = int(pooled.sum())
    n = np.array([wa.sum(), wb.sum()], dtype=float)
    if lj.size < 2 or N < 4:
        return math.nan, math.nan
    Bj = np.cumsum(lj) - lj / 2.0
    denom = Bj * (N - Bj) - N * lj / 4.0
    total = 0.0
    for w, ni in zip((wa, wb), n):
        f = w[keep].astype(float)
        Mij = np.cumsum(f) - f / 2.0
        total += float((lj / N * (N * Mij - Bj * ni) ** 2 / denom).sum()) / ni
    a2 = total * (N - 1.0) / N
    sigmasq = _variance_terms(n, N)
    return a2, (a2 - 1.0) / math.sqrt(sigmasq)


def ad_two_sample(a: WeightedSample, b: WeightedSample, interpolation: str = "quadratic") -> TestResult:
    """Standardized midrank A-D statistic; degenerate pools give p = 0.25.

    A pool whose mass sits on a single support point (or has fewer than
    four observations) has no defined statistic: it is reported as NaN with
    the least significant p.
    """
    _, wa, wb = common_support(a, b)
    n1, n2 = int(wa.sum()), int(wb.sum())
    if n1 == 0 or n2 == 0:
        raise EmptySampleError("empty window sample")
    _, t = ad_statistic(wa, wb)
    p = P_CEILING if math.isnan(t) else ad_pvalue(t, interpolation)
    return TestResult(t, p, n1, n2, "ad")
