"""Daily count series, season-aligned slicing and cumulative curves."""
from __future__ import annotations

import csv
import datetime as dt
import io
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ingest import MessageRecord

COUNT_MODES = ("messages", "unique_users")
MAX_WINDOW_DAYS = 120
ALL_SCOPE = "all"
MERGED_SCOPE = "all-countries"


class EmptySeasonError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesKey:
    scope: str
    keyword_set: str
    count_mode: str = "messages"

    def __post_init__(self):
        if self.count_mode not in COUNT_MODES:
            raise ValueError(f"unknown count_mode {self.count_mode!r}")


@dataclass(frozen=True)
class DailySeries:
    key: SeriesKey
    start_date: dt.date
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.int64).copy()
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if (arr < 0).any():
            raise ValueError("daily counts must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)

    @property
    def end_date(self) -> dt.date:
        return self.start_date + dt.timedelta(days=len(self.values) - 1)

    def dates(self) -> list[dt.date]:
        return [self.start_date + dt.timedelta(days=i) for i in range(len(self.values))]

    def count_on(self, day: dt.date) -> int:
        """Count for ``day``; days outside the series are zero."""
        i = (day - self.start_date).days
        if 0 <= i < len(self.values):
            return int(self.values[i])
        return 0

    def total(self, first: dt.date, last: dt.date) -> int:
        return sum(self.count_on(d) for d in date_range(first, last))


def date_range(first: dt.date, last: dt.date) -> Iterable[dt.date]:
    for i in range((last - first).days + 1):
        yield first + dt.timedelta(days=i)


# ---------------------------------------------------------------------------
# season calendar

def season_label_for(day: dt.date) -> str:
    """Winter seasons run July to June; label is ``"Y1-Y2"``."""
    first = day.year if day.month >= 7 else day.year - 1
    return f"{first}-{first + 1}"


def parse_season_label(label: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in label.split("-"))
    except ValueError:
        raise ValueError(f"bad season label {label!r}") from None
    if b != a + 1:
        raise ValueError(f"bad season label {label!r}")
    return a, b


def shift_season_label(label: str, years: int) -> str:
    a, _ = parse_season_label(label)
    return f"{a + years}-{a + years + 1}"


def date_in_season(month: int, day: int, label: str) -> dt.date:
    first, second = parse_season_label(label)
    year = first if month >= 7 else second
    if month == 2 and day == 29 and not _is_leap(year):
        day = 28
    return dt.date(year, month, day)


def shift_years(day: dt.date, years: int) -> dt.date:
    """Same month-day ``years`` later; 29 February maps to 28 February."""
    year = day.year + years
    if day.month == 2 and day.day == 29 and not _is_leap(year):
        return dt.date(year, 2, 28)
    return day.replace(year=year)


def _is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def _is_feb29(day: dt.date) -> bool:
    return day.month == 2 and day.day == 29


def canonical_days(start: dt.date, n: int) -> list[dt.date]:
    """``n`` consecutive calendar days from ``start`` with 29 February skipped."""
    if _is_feb29(start):
        start = start - dt.timedelta(days=1)
    out = []
    d = start
    while len(out) < n:
        if not _is_feb29(d):
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def canonical_start(end: dt.date, width: int) -> dt.date:
    """First day of the ``width``-day canonical window ending on ``end``."""
    if _is_feb29(end):
        end = end - dt.timedelta(days=1)
    d = end
    remaining = width - 1
    while remaining:
        d -= dt.timedelta(days=1)
        if not _is_feb29(d):
            remaining -= 1
    return d


@dataclass(frozen=True)
class SeasonWindow:
    """A (month, day)-anchored window that can be laid over any season.

    ``year_label`` names the winter season; anchors in July..December fall in
    its first year, anchors in January..June in its second.
    """
    anchor_start: tuple[int, int]
    width_days: int
    year_label: str

    def __post_init__(self):
        if not 1 <= self.width_days <= MAX_WINDOW_DAYS:
            raise ValueError(f"width_days must be in [1, {MAX_WINDOW_DAYS}], got {self.width_days}")
        parse_season_label(self.year_label)

    @classmethod
    def ending_on(cls, end: dt.date, width: int) -> "SeasonWindow":
        start = canonical_start(end, width)
        return cls((start.month, start.day), width, season_label_for(start))

    @property
    def start_date(self) -> dt.date:
        return date_in_season(*self.anchor_start, self.year_label)

    def days(self) -> list[dt.date]:
        return canonical_days(self.start_date, self.width_days)

    def shifted(self, years: int) -> "SeasonWindow":
        return SeasonWindow(self.anchor_start, self.width_days,
                            shift_season_label(self.year_label, years))


@dataclass(frozen=True)
class SeasonSlice:
    values: np.ndarray
    first_date: dt.date
    last_date: dt.date
    padded_days: int

    def __len__(self):
        return len(self.values)

    @property
    def total(self) -> int:
        return int(self.values.sum())


def season_slice(series: DailySeries, window: SeasonWindow) -> SeasonSlice:
    """Counts over ``window`` in the series, one bucket per canonical day.

    29 February is folded into the 28 February bucket, so windows from leap
    and common years have the same length. Days outside the series count as
    zero and are tallied in ``padded_days``.
    """
    days = window.days()
    out = np.zeros(len(days), dtype=np.int64)
    padded = 0
    lo, hi = series.start_date, series.end_date
    for i, d in enumerate(days):
        buckets = [d]
        if d.month == 2 and d.day == 28 and _is_leap(d.year):
            buckets.append(d + dt.timedelta(days=1))
        for b in buckets:
            if lo <= b <= hi:
                out[i] += series.values[(b - lo).days]
            else:
                padded += 1
    return SeasonSlice(out, days[0], days[-1], padded)


def cumulative_rescaled(counts: Sequence[int] | np.ndarray) -> np.ndarray:
    """Running share of the slice total; ends at exactly 1.0."""
    arr = np.asarray(counts, dtype=np.int64)
    total = int(arr.sum())
    if total <= 0:
        raise EmptySeasonError("empty season: no counts in slice")
    return np.cumsum(arr) / total


# ---------------------------------------------------------------------------
# aggregation

def _in_scope(scope: str, msg: MessageRecord, region) -> bool:
    if scope == ALL_SCOPE:
        return True
    if scope.startswith("lang:"):
        return msg.language == scope[5:]
    if region is None:
        return False
    if len(scope) == 2:
        return region.country == scope
    return region.code == scope


def aggregate_daily(messages: Iterable[MessageRecord], resolutions: Mapping[str, object],
                    key: SeriesKey, start: dt.date, end: dt.date) -> DailySeries:
    """Daily counts of messages (or distinct authors) for one scope and keyword set.

    ``scope`` is ``"all"``, ``"lang:<code>"``, a two-letter country code
    (every region of that country plus the country-only bucket), or a region
    code. ``resolutions`` maps author ids to resolved region ids.
    """
    n = (end - start).days + 1
    if n <= 0:
        raise ValueError("end precedes start")
    counts = np.zeros(n, dtype=np.int64)
    seen: dict[int, set] = defaultdict(set)
    for msg in messages:
        if msg.matched_keyword_set != key.keyword_set:
            continue
        i = (msg.day - start).days
        if not 0 <= i < n:
            continue
        if not _in_scope(key.scope, msg, resolutions.get(msg.author_id)):
            continue
        if key.count_mode == "messages":
            counts[i] += 1
        elif msg.author_id not in seen[i]:
            seen[i].add(msg.author_id)
            counts[i] += 1
    return DailySeries(key, start, counts)


def merge_across_languages(series: Sequence[DailySeries]) -> DailySeries:
    """Pointwise sum of aligned series into one ``all-countries`` series."""
    if not series:
        raise ValueError("nothing to merge")
    first = series[0]
    for s in series[1:]:
        if (s.start_date != first.start_date or len(s) != len(first)
                or s.key.count_mode != first.key.count_mode
                or s.key.keyword_set != first.key.keyword_set):
            raise ValueError("series must share dates, keyword set and count mode")
    total = np.sum([s.values for s in series], axis=0)
    key = SeriesKey(MERGED_SCOPE, first.key.keyword_set, first.key.count_mode)
    return DailySeries(key, first.start_date, total)


# ---------------------------------------------------------------------------
# persistence: "# key=value" header block then date,count rows

def series_to_csv(series: DailySeries) -> str:
    buf = io.StringIO()
    buf.write(f"# scope={series.key.scope}\n")
    buf.write(f"# keyword_set={series.key.keyword_set}\n")
    buf.write(f"# count_mode={series.key.count_mode}\n")
    buf.write("date,count\n")
    for d, v in zip(series.dates(), series.values):
        buf.write(f"{d.isoformat()},{int(v)}\n")
    return buf.getvalue()


def series_from_csv(text: str) -> DailySeries:
    meta = {}
    rows = []
    lines = text.splitlines()
    body_start = 0
    for i, line in enumerate(lines):
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = v.strip()
        else:
            body_start = i
            break
    reader = csv.DictReader(lines[body_start:])
    for row in reader:
        rows.append((dt.date.fromisoformat(row["date"]), int(row["count"])))
    if not rows:
        raise ValueError("series file has no rows")
    for (a, _), (b, _) in zip(rows, rows[1:]):
        if (b - a).days != 1:
            raise ValueError(f"gap in series between {a} and {b}")
    key = SeriesKey(meta["scope"], meta["keyword_set"], meta.get("count_mode", "messages"))
    return DailySeries(key, rows[0][0], [v for _, v in rows])


def scope_dirname(scope: str) -> str:
    """Filesystem-safe form of a scope (``lang:it`` -> ``lang-it``)."""
    return scope.replace(":", "-")


def series_path(root: Path, key: SeriesKey) -> Path:
    return Path(root) / key.keyword_set / scope_dirname(key.scope) / f"{key.count_mode}.csv"


def write_series(root: Path, series: DailySeries) -> Path:
    path = series_path(root, series.key)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(series_to_csv(series), encoding="utf-8")
    return path


def read_series(root: Path, key: SeriesKey) -> DailySeries:
    return series_from_csv(series_path(root, key).read_text(encoding="utf-8"))
