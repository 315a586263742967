from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class EmptySampleError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedSample:
    """Observations collapsed onto a strictly increasing support.

    ``weights[i]`` observations sit at ``support[i]``. A window of daily
    counts becomes a sample over day offsets via :meth:`from_counts`.
    """
    support: np.ndarray
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float)
        w = np.asarray(self.weights, dtype=np.int64)
        if s.shape != w.shape or s.ndim != 1:
            raise ValueError("support and weights must be 1-D and equal length")
        if len(s) > 1 and not (np.diff(s) > 0).all():
            raise ValueError("support must be strictly increasing")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return int(self.weights.sum())

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "WeightedSample":
        counts = np.asarray(counts, dtype=np.int64)
        return cls(np.arange(len(counts), dtype=float), counts)

    @classmethod
    def from_observations(cls, values: Sequence[float], support: Sequence[float] | None = None):
        values = np.asarray(values, dtype=float)
        if support is None:
            support = np.unique(values)
        support = np.asarray(support, dtype=float)
        idx = np.searchsorted(support, values)
        if len(values):
            clipped = np.minimum(idx, len(support) - 1)
            if (idx >= len(support)).any() or not np.array_equal(support[clipped], values):
                raise ValueError("observations outside the given support")
        return cls(support, np.bincount(idx, minlength=len(support)))

    def expand(self) -> np.ndarray:
        """One entry per observation (for cross-checks against unweighted code)."""
        return np.repeat(self.support, self.weights)


def common_support(a: WeightedSample, b: WeightedSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both weight vectors laid over the union of their supports."""
    if a.support.shape == b.support.shape and np.array_equal(a.support, b.support):
        return a.support, a.weights, b.weights
    support = np.union1d(a.support, b.support)
    wa = np.zeros(len(support), dtype=np.int64)
    wb = np.zeros(len(support), dtype=np.int64)
    wa[np.searchsorted(support, a.support)] = a.weights
    wb[np.searchsorted(support, b.support)] = b.weights
    return support, wa, wb


def day_level_pair(x_counts: Sequence[int], y_counts: Sequence[int]) -> tuple[WeightedSample, WeightedSample]:
    """Treat each day's count as one observation (w observations per window)."""
    x = np.asarray(x_counts, dtype=float)
    y = np.asarray(y_counts, dtype=float)
    support = np.union1d(x, y)
    return (WeightedSample.from_observations(x, support),
            WeightedSample.from_observations(y, support))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n1: int
    n2: int
    method: str

    __test__ = False  # not a pytest class
