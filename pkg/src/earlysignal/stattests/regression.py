from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

NEW = "new"


class DegenerateRegressionError(ValueError):
    pass


def relative_variation(n_now: int, n_prior: int) -> float | str:
    """(now - prior) / prior; ``"new"`` when only the current count is nonzero."""
    if n_now < 0 or n_prior < 0:
        raise ValueError("counts must be nonnegative")
    if n_prior == 0:
        return NEW if n_now > 0 else 0.0
    return (n_now - n_prior) / n_prior


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r2: float
    n_points: int


def loglog_fit(points: Iterable[tuple[float, float]]) -> RegressionFit:
    """OLS of log(count) on log(population), natural logs."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("need at least 3 (population, count) pairs")
    if (pts <= 0).any():
        raise ValueError("log-log regression needs positive coordinates")
    x, y = np.log(pts[:, 0]), np.log(pts[:, 1])
    xc, yc = x - x.mean(), y - y.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DegenerateRegressionError("degenerate regression: constant predictor")
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    ss_tot = float(yc @ yc)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RegressionFit(slope, intercept, min(1.0, max(0.0, r2)), len(pts))
