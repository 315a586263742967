import math
import warnings

import numpy as np
import pytest

from conftest import d, read_tsv
from earlysignal.georesolve import resolve_location
from earlysignal.report import (ChoroplethError, RegionReportRow, emit_anomaly_table, emit_choropleth,
                                emit_pvalue_curve, emit_region_table, emit_season_tests, fmt_ratio,
                                group_rows, region_rows, split_by_cutoff)
from earlysignal.stattests import AnomalySegment, PValueCurve, TestResult


def published_rows(gazetteer, country):
    rows = []
    for c, kind, name, now, prior, _ in read_tsv("region_variation.tsv"):
        if c == country and kind == "region":
            rows.append(RegionReportRow(resolve_location(name, gazetteer), int(now), int(prior)))
    return rows


def totals_line(table, country):
    for line in table.splitlines():
        f = line.split("\t")
        if f[0] == country and f[2] == "Total number of users":
            return f[3:]
    raise AssertionError("no totals row")


def test_italy_totals(gazetteer):
    rows = published_rows(gazetteer, "IT")
    assert len(rows) == 10
    assert totals_line(emit_region_table(rows), "IT") == ["477", "293", "0.63", "184"]


def test_uk_totals(gazetteer):
    now, prior, rv, _ = totals_line(emit_region_table(published_rows(gazetteer, "GB")), "GB")
    assert (now, prior) == ("1756", "603") and abs(float(rv) - 1.91) <= 0.005


def test_single_region_totals_equal_row(gazetteer):
    row = RegionReportRow(gazetteer.regions["ITC4"], 30, 12)
    table = emit_region_table([row])
    region_line = next(l for l in table.splitlines() if "\tITC4\t" in l).split("\t")
    assert totals_line(table, "IT") == region_line[3:]


def test_rows_sorted_by_variation_with_new_first(gazetteer):
    r = gazetteer.regions
    rows = [RegionReportRow(r["ITC4"], 20, 10), RegionReportRow(r["ITI4"], 40, 10),
            RegionReportRow(r["ITF3"], 12, 0)]
    ordered = group_rows(rows)["IT"]
    assert [x.region.code for x in ordered] == ["ITF3", "ITI4", "ITC4"]
    assert fmt_ratio(ordered[0].relative_variation) == "new"


def test_region_rows_filters(gazetteer):
    now = {"ITC4": 201, "ITI4": 9, "ITF3": 30, "IT": 50}
    prior = {"ITC4": 151, "ITI4": 2, "ITF3": 31}
    rows = region_rows(now, prior, gazetteer, min_users=10)
    assert [x.region.code for x in rows] == ["ITC4"]
    rows = region_rows(now, prior, gazetteer, min_users=5, only_increases=False)
    assert [x.region.code for x in rows] == ["ITC4", "ITF3", "ITI4"]


def test_tweet_totals_line(gazetteer):
    table = emit_region_table([RegionReportRow(gazetteer.regions["ITC4"], 20, 10)], tweets_by_country={"IT": 77})
    assert "Total number of tweets = 77" in table


# ---------------------------------------------------------------------------

def test_choropleth_needs_boundaries(gazetteer):
    with pytest.raises(ChoroplethError):
        emit_choropleth({}, gazetteer)


def test_choropleth_zero_filled(grid_gazetteer):
    geo = emit_choropleth({}, grid_gazetteer)
    assert len(geo["features"]) == len(grid_gazetteer.polygons)
    assert all(f["properties"]["value"] == 0 for f in geo["features"])
    geo = emit_choropleth({"ITC4": 5}, grid_gazetteer)
    vals = {f["properties"]["code"]: f["properties"]["value"] for f in geo["features"]}
    assert vals["ITC4"] == 5 and sum(vals.values()) == 5


def test_choropleth_unknown_region_warns(grid_gazetteer):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        geo = emit_choropleth({"ZZ9": 3}, grid_gazetteer)
    assert caught
    null = [f for f in geo["features"] if f["properties"]["code"] == "ZZ9"][0]
    assert null["geometry"] is None and null["properties"]["value"] is None


def test_published_dry_cough_counts_map(grid_gazetteer):
    rows = read_tsv("dry_cough_users.tsv")
    values = {resolve_location(name, grid_gazetteer).code: int(n) for name, n in rows}
    geo = emit_choropleth(values, grid_gazetteer)
    nonzero = {f["properties"]["code"]: f["properties"]["value"] for f in geo["features"]
               if f["properties"]["value"]}
    assert len(nonzero) == 50 and nonzero == values


# ---------------------------------------------------------------------------

def seg(a, b, p=0.01):
    return AnomalySegment(d(a), d(b), p, 0.05)


def test_cutoff_split():
    early, news = split_by_cutoff([seg("2020-01-05", "2020-01-21"), seg("2020-01-20", "2020-01-22")],
                                  d("2020-01-21"))
    assert len(early) == 1 and len(news) == 1


def test_anomaly_table_sections():
    text = emit_anomaly_table({"lang:nl": [seg("2019-12-16", "2019-12-16")],
                               "lang:it": [seg("2020-01-05", "2020-01-25", 0.001)]},
                              d("2020-01-21"), labels={"lang:nl": "The Netherlands"})
    body = [l for l in text.splitlines() if not l.startswith("#")][1:]
    assert body[0].startswith("early_warning\tlang:nl\tThe Netherlands\t2019/12/16\t2019/12/16\t1\t0.01000")
    assert body[1].startswith("news_era\tlang:it")


def test_fixed_decimals():
    curve = PValueCurve([d("2020-01-01"), d("2020-01-02")], np.array([0.123456789, math.nan]), (50, 70), "ad")
    text = emit_pvalue_curve(curve)
    assert "2020-01-01,0.12346" in text and text.rstrip().endswith("2020-01-02,")
    cells = emit_season_tests({"lang:de": {"2015-2016": TestResult(-1.139544, 0.25, 10, 10, "ad")}},
                              ["2015-2016", "2016-2017"])
    assert cells.splitlines()[-1] == "lang:de\tlang:de\t-1.13954 (0.25000)\t"
