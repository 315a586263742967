"""Table, curve and map emitters.

Ratios are printed with 2 decimals and test statistics / p-values with 5,
so reruns produce identical bytes. Tables are tab-separated with a
``# key=value`` header block.
"""
from __future__ import annotations

import datetime as dt
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .config import COUNTRY_NAMES
from .georesolve import STUDY_COUNTRIES, Gazetteer, RegionId
from .stattests import NEW, AnomalySegment, PValueCurve, RegressionFit, TestResult, relative_variation


class ChoroplethError(ValueError):
    pass


def fmt_ratio(x) -> str:
    if x == NEW:
        return NEW
    return f"{x:.2f}"


def fmt_stat(x: float) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.5f}"


def fmt_date(d: dt.date) -> str:
    return d.strftime("%Y/%m/%d")


def _header(meta: Mapping) -> list[str]:
    return [f"# {k}={v}" for k, v in meta.items()]


# ---------------------------------------------------------------------------
# region user tables

@dataclass(frozen=True)
class RegionReportRow:
    region: RegionId
    users_now: int
    users_prior: int

    @property
    def relative_variation(self):
        return relative_variation(self.users_now, self.users_prior)

    @property
    def absolute_variation(self) -> int:
        return self.users_now - self.users_prior


def _rank_key(row: RegionReportRow):
    rv = row.relative_variation
    return (0 if rv == NEW else 1, 0.0 if rv == NEW else -rv, -row.users_now, row.region.code)


def region_rows(now: Mapping[str, int], prior: Mapping[str, int], gazetteer: Gazetteer,
                min_users: int = 10, only_increases: bool = True) -> list[RegionReportRow]:
    """Rows for sub-national regions passing the size and direction rules."""
    rows = []
    for code in sorted(set(now) | set(prior)):
        region = gazetteer.region(code)
        if region is None or region.level == "country":
            continue
        row = RegionReportRow(region, int(now.get(code, 0)), int(prior.get(code, 0)))
        if row.users_now < min_users:
            continue
        if only_increases and row.users_now <= row.users_prior:
            continue
        rows.append(row)
    return rows


def group_rows(rows: Iterable[RegionReportRow], country_order: Sequence[str] = STUDY_COUNTRIES
               ) -> dict[str, list[RegionReportRow]]:
    """Rows per country, each sorted by relative variation (``new`` first)."""
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row.region.country, []).append(row)
    order = [c for c in country_order if c in groups] + sorted(c for c in groups if c not in country_order)
    return {c: sorted(groups[c], key=_rank_key) for c in order}


def totals(rows: Sequence[RegionReportRow]) -> tuple[int, int]:
    return sum(r.users_now for r in rows), sum(r.users_prior for r in rows)


def emit_region_table(rows: Iterable[RegionReportRow], country_order: Sequence[str] = STUDY_COUNTRIES,
                      tweets_by_country: Mapping[str, int] | None = None,
                      meta: Mapping | None = None) -> str:
    """Per-country blocks: header, tweet total, region rows, user totals.

    The totals row is computed from the summed counts of the listed rows.
    """
    lines = _header(meta or {})
    lines.append("country\tcode\tregion\tusers_now\tusers_prior\trelative_variation\tabsolute_variation")
    for country, group in group_rows(rows, country_order).items():
        lines.append(f"{country}\t\t{COUNTRY_NAMES.get(country, country)}\t\t\t\t")
        if tweets_by_country is not None:
            lines.append(f"{country}\t\tTotal number of tweets = {int(tweets_by_country.get(country, 0))}"
                         "\t\t\t\t")
        for r in group:
            lines.append(f"{country}\t{r.region.code}\t{r.region.name}\t{r.users_now}\t{r.users_prior}\t"
                         f"{fmt_ratio(r.relative_variation)}\t{r.absolute_variation}")
        now, prior = totals(group)
        lines.append(f"{country}\t\tTotal number of users\t{now}\t{prior}\t"
                     f"{fmt_ratio(relative_variation(now, prior))}\t{now - prior}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# choropleth

def emit_choropleth(values: Mapping[str, float], gazetteer: Gazetteer,
                    extra: Mapping[str, Mapping] | None = None) -> dict:
    """One feature per region with boundaries; missing regions get value 0.

    A value keyed by a region without a polygon yields a feature with null
    geometry and null value, plus a warning.
    """
    if not gazetteer.polygons:
        raise ChoroplethError("choropleth requires boundary file")
    extra = extra or {}
    features = []
    for code in sorted(set(gazetteer.polygons) | set(values)):
        region = gazetteer.region(code)
        props = {"code": code, "name": region.name if region else None,
                 "country": region.country if region else None}
        if code in gazetteer.polygons:
            props["value"] = values.get(code, 0)
            geom = gazetteer.geometry.get(code) or {"type": "Polygon",
                                                    "coordinates": [list(map(list, r)) for r in
                                                                    gazetteer.polygons[code]]}
        else:
            warnings.warn(f"no boundary polygon for region {code}; emitting a null feature", stacklevel=2)
            props["value"] = None
            geom = None
        props.update(extra.get(code, {}))
        features.append({"type": "Feature", "properties": props, "geometry": geom})
    return {"type": "FeatureCollection", "features": features}


# ---------------------------------------------------------------------------
# curves and anomaly tables

def emit_pvalue_curve(curve: PValueCurve, meta: Mapping | None = None) -> str:
    lo, hi = curve.widths_used
    head = {"method": curve.method, "widths": f"{lo}-{hi}", **(meta or {})}
    lines = _header(head) + ["date,p_value"]
    for d, p in zip(curve.dates, curve.p_values):
        lines.append(f"{d.isoformat()},{'' if math.isnan(p) else fmt_stat(float(p))}")
    return "\n".join(lines) + "\n"


def split_by_cutoff(segments: Iterable[AnomalySegment], cutoff: dt.date
                    ) -> tuple[list[AnomalySegment], list[AnomalySegment]]:
    """(early-warning, news-era): a segment reaching past ``cutoff`` is news-era."""
    early, news = [], []
    for s in segments:
        (early if s.end_date <= cutoff else news).append(s)
    return early, news


def emit_anomaly_table(segments: Mapping[str, Sequence[AnomalySegment]], cutoff: dt.date,
                       meta: Mapping | None = None, labels: Mapping[str, str] | None = None) -> str:
    """Segments per scope in two sections; news-era rows are never early warnings."""
    labels = labels or {}
    lines = _header({**(meta or {}), "cutoff": cutoff.isoformat()})
    cols = "section\tscope\tlabel\tstart\tend\tdays\tmin_p"
    lines.append(cols)
    rows = {"early_warning": [], "news_era": []}
    for scope in sorted(segments):
        early, news = split_by_cutoff(segments[scope], cutoff)
        for section, segs in (("early_warning", early), ("news_era", news)):
            for s in segs:
                rows[section].append(f"{section}\t{scope}\t{labels.get(scope, scope)}\t{fmt_date(s.start_date)}\t"
                                     f"{fmt_date(s.end_date)}\t{s.days}\t{fmt_stat(s.min_p)}")
    lines += rows["early_warning"] + rows["news_era"]
    return "\n".join(lines) + "\n"


def emit_season_tests(results: Mapping[str, Mapping[str, TestResult | None]], seasons: Sequence[str],
                      meta: Mapping | None = None, labels: Mapping[str, str] | None = None) -> str:
    """Scope rows by baseline-season columns, cells ``statistic (p)``."""
    labels = labels or {}
    lines = _header(meta or {})
    lines.append("\t".join(["scope", "label", *seasons]))
    for scope in sorted(results):
        cells = []
        for s in seasons:
            r = results[scope].get(s)
            cells.append("" if r is None else f"{fmt_stat(r.statistic)} ({fmt_stat(r.p_value)})")
        lines.append("\t".join([scope, labels.get(scope, scope), *cells]))
    return "\n".join(lines) + "\n"


def emit_cumulative(focal_dates: Sequence[dt.date], focal: Sequence[float] | None,
                    baseline: Sequence[float] | None, meta: Mapping | None = None) -> str:
    lines = _header(meta or {}) + ["offset,date,focal,baseline"]
    for i, d in enumerate(focal_dates):
        f = "" if focal is None else fmt_stat(float(focal[i]))
        b = "" if baseline is None else fmt_stat(float(baseline[i]))
        lines.append(f"{i},{d.isoformat()},{f},{b}")
    return "\n".join(lines) + "\n"


def regression_summary(fit: RegressionFit | None, points: Sequence[tuple[str, int, int]],
                       reason: str | None = None) -> dict:
    out = {"points": [{"code": c, "population": p, "users": u} for c, p, u in points]}
    if fit is None:
        out["status"] = reason or "not fitted"
    else:
        out.update(status="ok", slope=round(fit.slope, 10), intercept=round(fit.intercept, 10),
                   r2=round(fit.r2, 10), n_points=fit.n_points)
    return out
