"""Moving-window seasonal comparison and anomaly segmentation.

For every day ``d`` of the focal range and every width ``w`` in
``[w_min, w_max]`` the window of ``w`` canonical days ending on ``d`` is
cut from the focal season and from the baseline season ``lag_years``
earlier (same month-day span), the two windows are tested against each
other, and the p-values are averaged over the widths.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..timeseries import (DailySeries, SeasonWindow, date_range, parse_season_label,
                          season_label_for, season_slice)
from .ad import ad_two_sample
from .ks import EXACT_LIMIT, ks_two_sample
from .samples import TestResult, WeightedSample, day_level_pair

METHODS = ("ks", "ad")
SAMPLE_MODES = ("tweets", "days")


class MissingBaselineError(ValueError):
    pass


@dataclass(frozen=True)
class ScanOptions:
    w_min: int = 50
    w_max: int = 70
    method: str = "ks"
    sample_mode: str = "tweets"
    exact_limit: int = EXACT_LIMIT
    ad_interpolation: str = "quadratic"

    def __post_init__(self):
        if not 1 <= self.w_min <= self.w_max:
            raise ValueError("need 1 <= w_min <= w_max")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.sample_mode not in SAMPLE_MODES:
            raise ValueError(f"sample_mode must be one of {SAMPLE_MODES}")

    @property
    def widths(self) -> range:
        return range(self.w_min, self.w_max + 1)


@dataclass
class PValueCurve:
    dates: list
    p_values: np.ndarray  # NaN marks a day with no testable width
    widths_used: tuple
    method: str
    skipped: list = field(default_factory=list)  # (date, width, reason)
    per_width: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class AnomalySegment:
    start_date: dt.date
    end_date: dt.date
    min_p: float
    alpha: float

    @property
    def days(self) -> int:
        return (self.end_date - self.start_date).days + 1


def compare_slices(x: Sequence[int], y: Sequence[int], options: ScanOptions = ScanOptions()) -> TestResult:
    """Run the configured test on two aligned day-count vectors."""
    if options.sample_mode == "tweets":
        a, b = WeightedSample.from_counts(x), WeightedSample.from_counts(y)
    else:
        a, b = day_level_pair(x, y)
    if options.method == "ks":
        return ks_two_sample(a, b, options.exact_limit)
    return ad_two_sample(a, b, options.ad_interpolation)


def window_scan(focal: DailySeries, baseline: DailySeries, first_day: dt.date, last_day: dt.date,
                options: ScanOptions = ScanOptions(), lag_years: int = 1) -> PValueCurve:
    """Width-averaged p-value for each day in ``[first_day, last_day]``.

    Windows end on the scanned day. A (day, width) pair whose focal or
    baseline window holds no messages is skipped and recorded; a day with
    every width skipped gets NaN.
    """
    days = list(date_range(first_day, last_day))
    widths = list(options.widths)
    grid = np.full((len(days), len(widths)), np.nan)
    skipped = []
    for i, d in enumerate(days):
        for j, w in enumerate(widths):
            win = SeasonWindow.ending_on(d, w)
            x = season_slice(focal, win).values
            y = season_slice(baseline, win.shifted(-lag_years)).values
            if x.sum() == 0 or y.sum() == 0:
                skipped.append((d, w, "empty window"))
                continue
            grid[i, j] = compare_slices(x, y, options).p_value
    averaged = np.array([_mean(row) for row in grid])
    return PValueCurve(days, averaged, (options.w_min, options.w_max), options.method,
                       skipped, grid)


def _mean(values) -> float:
    vals = [float(v) for v in values if not math.isnan(v)]
    if not vals:
        return math.nan
    return math.fsum(vals) / len(vals)


def preceding_seasons(focal_season: str, count: int = 5) -> list[str]:
    first, _ = parse_season_label(focal_season)
    return [f"{first - k}-{first - k + 1}" for k in range(count, 0, -1)]


def multi_baseline_scan(focal: DailySeries, baselines: Mapping[str, DailySeries],
                        first_day: dt.date, last_day: dt.date,
                        options: ScanOptions = ScanOptions(), n_baselines: int = 5,
                        focal_season: str | None = None) -> PValueCurve:
    """Average of single-baseline curves against each of the preceding seasons.

    ``baselines`` maps season labels (``"2014-2015"``...) to series covering
    that season; one long series may be passed under every label. A day
    that is a gap in any baseline curve is a gap in the average.
    """
    focal_season = focal_season or season_label_for(first_day)
    wanted = preceding_seasons(focal_season, n_baselines)
    missing = [s for s in wanted if s not in baselines]
    if missing:
        raise MissingBaselineError(f"missing baseline seasons: {', '.join(missing)}")
    focal_first, _ = parse_season_label(focal_season)
    curves = []
    for label in wanted:
        lag = focal_first - parse_season_label(label)[0]
        curves.append(window_scan(focal, baselines[label], first_day, last_day, options, lag))
    stacked = np.vstack([c.p_values for c in curves])
    averaged = np.array([math.nan if np.isnan(col).any() else math.fsum(col) / len(col)
                         for col in stacked.T])
    skipped = [(d, w, f"{label}: {r}") for label, c in zip(wanted, curves) for d, w, r in c.skipped]
    return PValueCurve(curves[0].dates, averaged, (options.w_min, options.w_max), options.method,
                       skipped, stacked)


def extract_anomaly_periods(curve: PValueCurve, alpha: float) -> list[AnomalySegment]:
    """Maximal runs of consecutive days with p < ``alpha``; gaps break runs."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    segments = []
    start = None
    min_p = math.inf
    for i, p in enumerate(curve.p_values):
        flagged = not math.isnan(p) and p < alpha
        if flagged:
            if start is None:
                start, min_p = i, p
            else:
                min_p = min(min_p, p)
        elif start is not None:
            segments.append(AnomalySegment(curve.dates[start], curve.dates[i - 1], float(min_p), alpha))
            start = None
    if start is not None:
        segments.append(AnomalySegment(curve.dates[start], curve.dates[-1], float(min_p), alpha))
    return segments


def season_test(focal: DailySeries, baseline: DailySeries, window: SeasonWindow,
                options: ScanOptions = ScanOptions(), lag_years: int = 1) -> TestResult:
    """One test over a whole season window (per-season table rows)."""
    x = season_slice(focal, window).values
    y = season_slice(baseline, window.shifted(-lag_years)).values
    return compare_slices(x, y, options)
