"""Stage functions and the end-to-end run.

Layout of a run directory::

    manifest.json                 config hash, input digests, stage statistics, file digests
    stages/ingest/                messages.jsonl, users.jsonl, stats.json
    stages/filter/                messages.jsonl, stats.json
    stages/georesolve/            resolutions.csv, meta.json
    series/<set>/<scope>/messages.csv
    series/<set>/window_users.csv per-season distinct users and messages by region
    reports/<set>/...             p-value curves, anomaly tables, season tests,
                                  region users, cumulative curves, map, regression

Every stage writes only inside its own directory and every file is written
with sorted keys and fixed float formatting, so two runs over the same
inputs produce identical bytes. A failing stage moves what was produced so
far under ``failed/`` next to an ``error.json`` naming the stage.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import hashlib
import io
import json
import shutil
import warnings
from collections import defaultdict
from pathlib import Path
from typing import Mapping

from . import __version__
from .config import COUNTRY_NAMES, COUNTRY_OF_LANGUAGE, KeywordSet, PipelineConfig
from .filters import apply_filters
from .georesolve import (STUDY_COUNTRIES, Gazetteer, load_foreign_places, load_gazetteer, read_resolved_regions,
                         resolve_users, write_resolutions)
from .ingest import (IngestOptions, MessageRecord, iter_archive_lines, load_schema, parse_archive,
                     read_messages, read_users, write_messages, write_users)
from .report import (emit_anomaly_table, emit_choropleth, emit_cumulative, emit_pvalue_curve, emit_region_table,
                     emit_season_tests, region_rows, regression_summary)
from .stattests import (DegenerateRegressionError, extract_anomaly_periods, loglog_fit,
                        multi_baseline_scan, preceding_seasons, relative_variation, season_test, window_scan)
from .stattests.scan import ScanOptions
from .timeseries import (MERGED_SCOPE, DailySeries, EmptySeasonError, SeasonWindow, SeriesKey, aggregate_daily,
                         cumulative_rescaled, date_in_season, merge_across_languages, parse_season_label,
                         read_series, scope_dirname, season_slice, shift_season_label, write_series)

STAGES = ("ingest", "filter", "georesolve", "aggregate", "detect", "report")
OWNED = ("manifest.json", "stages", "series", "reports", "failed")


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# scopes and windows

def scan_scopes(cfg: PipelineConfig, kset: KeywordSet) -> list[str]:
    langs = [l for l in cfg.languages if l in kset.words]
    if cfg.scan_by == "language":
        scopes = [f"lang:{l}" for l in langs]
    else:
        scopes = sorted({COUNTRY_OF_LANGUAGE[l] for l in langs})
    if kset.merge_languages:
        scopes.append(MERGED_SCOPE)
    return scopes


def scope_label(scope: str) -> str:
    if scope.startswith("lang:"):
        return COUNTRY_NAMES[COUNTRY_OF_LANGUAGE[scope[5:]]]
    if scope == MERGED_SCOPE:
        return "All countries"
    return COUNTRY_NAMES.get(scope, scope)


def season_window(cfg: PipelineConfig, which: str, season: str) -> tuple[dt.date, dt.date]:
    start, end = (cfg.anchor_start, cfg.anchor_end) if which == "anchor" else (cfg.summary_start, cfg.summary_end)
    return date_in_season(*start, season), date_in_season(*end, season)


def scan_range(cfg: PipelineConfig) -> tuple[dt.date, dt.date]:
    first, last = season_window(cfg, "anchor", cfg.focal_season)
    if not cfg.allow_post_cutoff:
        last = min(last, cfg.cutoff)
    if last < first:
        raise ValueError(f"scan range is empty: {first} .. {last} (cutoff {cfg.cutoff})")
    return first, last


def _covers(series: DailySeries, first: dt.date, last: dt.date) -> bool:
    return series.start_date <= first and last <= series.end_date


# ---------------------------------------------------------------------------
# stages

def stage_ingest(cfg: PipelineConfig, out: Path) -> dict:
    if not cfg.archives:
        raise ValueError("no input archives configured")
    options = IngestOptions(languages=tuple(cfg.languages), study_start=cfg.study_start, study_end=cfg.study_end,
                            keyword_sets=cfg.keyword_map(), max_malformed_fraction=cfg.max_malformed_fraction)
    messages, users, stats = parse_archive(iter_archive_lines(cfg.archives), load_schema(cfg.schema), options)
    out.mkdir(parents=True, exist_ok=True)
    write_messages(out / "messages.jsonl", messages)
    write_users(out / "users.jsonl", sorted(users, key=lambda u: u.author_id))
    _write_json(out / "stats.json", stats.to_json())
    return stats.to_json()


def stage_filter(cfg: PipelineConfig, ingest_dir: Path, out: Path) -> dict:
    messages = read_messages(ingest_dir / "messages.jsonl")
    users = {u.author_id: u for u in read_users(ingest_dir / "users.jsonl")}
    known = {k.name for k in cfg.keyword_sets}
    messages = [m for m in messages if m.matched_keyword_set in known]
    survivors, stats = apply_filters(messages, users, cfg.filter_policy)
    per_set = {}
    for k in sorted(known):
        _, s = apply_filters([m for m in messages if m.matched_keyword_set == k], users, cfg.filter_policy)
        per_set[k] = s.to_json()
    out.mkdir(parents=True, exist_ok=True)
    write_messages(out / "messages.jsonl", survivors)
    result = {"all": stats.to_json(), "by_keyword_set": per_set}
    _write_json(out / "stats.json", result)
    return result


def load_gazetteer_for(cfg: PipelineConfig) -> Gazetteer:
    return load_gazetteer(cfg.gazetteer, cfg.boundaries)


def stage_georesolve(cfg: PipelineConfig, users_path: Path, out: Path, gazetteer: Gazetteer | None = None) -> dict:
    gaz = gazetteer or load_gazetteer_for(cfg)
    users = read_users(users_path)
    resolutions, meta = resolve_users(users, gaz, load_foreign_places(cfg.foreign_places))
    out.mkdir(parents=True, exist_ok=True)
    write_resolutions(out / "resolutions.csv", resolutions)
    by_region = defaultdict(int)
    for r in resolutions.values():
        if r.region is not None:
            by_region[r.region.code] += 1
    meta = {**meta, "users_by_region": dict(sorted(by_region.items()))}
    _write_json(out / "meta.json", meta)
    return meta


def _window_users(messages, resolved, first: dt.date, last: dt.date):
    users, msgs = defaultdict(set), defaultdict(int)
    c_users, c_msgs = defaultdict(set), defaultdict(int)
    for m in messages:
        if not first <= m.day <= last:
            continue
        region = resolved.get(m.author_id)
        if region is None:
            continue
        users[region.code].add(m.author_id)
        msgs[region.code] += 1
        c_users[region.country].add(m.author_id)
        c_msgs[region.country] += 1
    rows = [("region", c, len(users[c]), msgs[c]) for c in sorted(users)]
    rows += [("country", c, len(c_users[c]), c_msgs[c]) for c in sorted(c_users)]
    return rows


def stage_aggregate(cfg: PipelineConfig, messages_path: Path, resolutions_path: Path, out: Path,
                    gazetteer: Gazetteer | None = None) -> dict:
    gaz = gazetteer or load_gazetteer_for(cfg)
    messages = read_messages(messages_path)
    resolved = read_resolved_regions(resolutions_path, gaz)
    by_set: dict[str, list[MessageRecord]] = defaultdict(list)
    for m in messages:
        by_set[m.matched_keyword_set].append(m)
    summary = {}
    for kset in cfg.keyword_sets:
        msgs = by_set.get(kset.name, [])
        written = []
        lang_series = []
        for scope in scan_scopes(cfg, kset):
            if scope == MERGED_SCOPE:
                continue
            s = aggregate_daily(msgs, resolved, SeriesKey(scope, kset.name), cfg.study_start, cfg.study_end)
            write_series(out, s)
            written.append(scope)
            lang_series.append(s)
        if kset.merge_languages:
            if cfg.scan_by == "language":
                merged = merge_across_languages(lang_series)
            else:
                merged = aggregate_daily(msgs, {}, SeriesKey(MERGED_SCOPE, kset.name), cfg.study_start,
                                         cfg.study_end)
            write_series(out, merged)
            written.append(MERGED_SCOPE)
        # region-level message series for every region with a resolved author
        regions = sorted({resolved[m.author_id].code for m in msgs if m.author_id in resolved})
        for code in regions:
            write_series(out, aggregate_daily(msgs, resolved, SeriesKey(code, kset.name), cfg.study_start,
                                              cfg.study_end))
        # distinct users per region in the table window of every season in range
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["season", "window_start", "window_end", "kind", "code", "users", "messages"])
        for season in _seasons_in_range(cfg):
            first, last = season_window(cfg, kset.region_window, season)
            for row in _window_users(msgs, resolved, first, last):
                w.writerow([season, first.isoformat(), last.isoformat(), *row])
        _write_text(out / kset.name / "window_users.csv", buf.getvalue())
        summary[kset.name] = {"messages": len(msgs), "scan_scopes": written, "region_series": regions}
    return summary


def _seasons_in_range(cfg: PipelineConfig) -> list[str]:
    first = cfg.study_start.year - 1
    last = cfg.study_end.year
    out = []
    for y in range(first, last + 1):
        label = f"{y}-{y + 1}"
        a, b = date_in_season(*cfg.summary_start, label), date_in_season(*cfg.summary_end, label)
        c, d = date_in_season(*cfg.anchor_start, label), date_in_season(*cfg.anchor_end, label)
        if max(a, c) >= cfg.study_start and min(b, d) <= cfg.study_end:
            out.append(label)
    return out


def _read_window_users(path: Path):
    table = defaultdict(dict)
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            table[(row["season"], row["kind"])][row["code"]] = (int(row["users"]), int(row["messages"]))
    return table


def stage_detect(cfg: PipelineConfig, series_dir: Path, out: Path) -> dict:
    first, last = scan_range(cfg)
    summary = {}
    for kset in cfg.keyword_sets:
        kdir = out / kset.name
        series_by_scope = {scope: read_series(series_dir, SeriesKey(scope, kset.name))
                           for scope in scan_scopes(cfg, kset)}
        labels = {s: scope_label(s) for s in series_by_scope}
        counts = {}
        for method in cfg.methods:
            opts = dataclasses.replace(cfg.scan, method=method)
            segments_by_alpha = {a: {} for a in cfg.alphas}
            for scope, series in series_by_scope.items():
                curve = _scan(cfg, series, first, last, opts)
                meta = {"keyword_set": kset.name, "scope": scope, "focal_season": cfg.focal_season,
                        "baselines": cfg.n_baselines, "sample_mode": opts.sample_mode,
                        "skipped_pairs": len(curve.skipped)}
                _write_text(kdir / "pvalues" / method / f"{scope_dirname(scope)}.csv",
                            emit_pvalue_curve(curve, meta))
                for a in cfg.alphas:
                    segments_by_alpha[a][scope] = extract_anomaly_periods(curve, a)
            for a in cfg.alphas:
                meta = {"keyword_set": kset.name, "method": method, "alpha": a,
                        "widths": f"{opts.w_min}-{opts.w_max}", "baselines": cfg.n_baselines}
                _write_text(kdir / f"anomalies_{method}_alpha{a:g}.tsv",
                            emit_anomaly_table(segments_by_alpha[a], cfg.cutoff, meta, labels))
            counts[method] = {f"{a:g}": {s: len(v) for s, v in segs.items()}
                              for a, segs in segments_by_alpha.items()}
        for method in ("ks", "ad"):
            _write_text(kdir / f"season_tests_{method}.tsv", _season_tests(cfg, kset, series_dir, method))
        summary[kset.name] = {"scan_range": [first.isoformat(), last.isoformat()], "segments": counts}
    return summary


def _scan(cfg: PipelineConfig, series: DailySeries, first: dt.date, last: dt.date, opts: ScanOptions):
    if cfg.n_baselines == 1:
        return window_scan(series, series, first, last, opts)
    wanted = preceding_seasons(cfg.focal_season, cfg.n_baselines)
    lag_ok = {s: series for s in wanted
              if series.start_date <= date_in_season(*cfg.anchor_start, s) - dt.timedelta(days=opts.w_max)}
    return multi_baseline_scan(series, lag_ok, first, last, opts, cfg.n_baselines, cfg.focal_season)


def _season_tests(cfg: PipelineConfig, kset: KeywordSet, series_dir: Path, method: str) -> str:
    opts = ScanOptions(cfg.scan.w_min, cfg.scan.w_max, method, cfg.scan.sample_mode, cfg.scan.exact_limit,
                       cfg.scan.ad_interpolation)
    baselines = preceding_seasons(cfg.focal_season, cfg.season_test_baselines)
    s_start, s_end = season_window(cfg, "summary", cfg.focal_season)
    width = (s_end - s_start).days + 1
    window = SeasonWindow(cfg.summary_start, width, cfg.focal_season)
    focal_first = parse_season_label(cfg.focal_season)[0]
    results = {}
    for scope in scan_scopes(cfg, kset):
        series = read_series(series_dir, SeriesKey(scope, kset.name))
        row = {}
        for label in baselines:
            lag = focal_first - parse_season_label(label)[0]
            shifted = window.shifted(-lag)
            bdays = shifted.days()
            if not (_covers(series, s_start, s_end) and _covers(series, bdays[0], bdays[-1])):
                row[label] = None
                continue
            x = season_slice(series, window)
            y = season_slice(series, shifted)
            if x.total == 0 or y.total == 0:
                row[label] = None
                continue
            row[label] = season_test(series, series, window, opts, lag)
        results[scope] = row
    meta = {"keyword_set": kset.name, "method": method, "focal_season": cfg.focal_season,
            "window": f"{s_start.isoformat()}..{s_end.isoformat()}", "sample_mode": cfg.scan.sample_mode}
    return emit_season_tests(results, baselines, meta, {s: scope_label(s) for s in results})


def stage_report(cfg: PipelineConfig, series_dir: Path, out: Path, gazetteer: Gazetteer | None = None) -> dict:
    gaz = gazetteer or load_gazetteer_for(cfg)
    prior_season = shift_season_label(cfg.focal_season, -1)
    first, last = scan_range(cfg)
    summary = {}
    for kset in cfg.keyword_sets:
        kdir = out / kset.name
        info: dict = {}
        table = _read_window_users(series_dir / kset.name / "window_users.csv")
        now = {c: u for c, (u, _) in table.get((cfg.focal_season, "region"), {}).items()}
        prior = {c: u for c, (u, _) in table.get((prior_season, "region"), {}).items()}
        tweets = {c: m for c, (_, m) in table.get((cfg.focal_season, "country"), {}).items()}
        rows = region_rows(now, prior, gaz, cfg.min_users, cfg.only_increases)
        w_first, w_last = season_window(cfg, kset.region_window, cfg.focal_season)
        meta = {"keyword_set": kset.name, "focal_season": cfg.focal_season, "prior_season": prior_season,
                "window": f"{w_first.isoformat()}..{w_last.isoformat()}", "min_users": cfg.min_users}
        _write_text(kdir / "region_users.tsv", emit_region_table(rows, STUDY_COUNTRIES, tweets, meta))
        info["region_rows"] = len(rows)

        for scope in scan_scopes(cfg, kset):
            series = read_series(series_dir, SeriesKey(scope, kset.name))
            window = SeasonWindow(cfg.anchor_start, (last - first).days + 1, cfg.focal_season)
            fx = season_slice(series, window)
            bx = season_slice(series, window.shifted(-1))
            curves = {}
            for name, sl in (("focal", fx), ("baseline", bx)):
                try:
                    curves[name] = cumulative_rescaled(sl.values)
                except EmptySeasonError:
                    curves[name] = None
            cmeta = {"keyword_set": kset.name, "scope": scope, "focal_season": cfg.focal_season,
                     "baseline_season": prior_season,
                     "empty": ",".join(k for k, v in curves.items() if v is None) or "none"}
            _write_text(kdir / "cumulative" / f"{scope_dirname(scope)}.csv",
                        emit_cumulative(window.days(), curves["focal"], curves["baseline"], cmeta))

        sub = {c: u for c, u in now.items() if gaz.region(c) and gaz.region(c).level != "country"}
        if gaz.polygons:
            extra = {}
            for code in sorted(set(sub) | set(gaz.polygons)):
                rv = relative_variation(now.get(code, 0), prior.get(code, 0))
                extra[code] = {"users_prior": prior.get(code, 0),
                               "relative_variation": rv if isinstance(rv, str) else round(rv, 6)}
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                geo = emit_choropleth(sub, gaz, extra)
            _write_json(kdir / "choropleth.geojson", geo)
            info["choropleth_features"] = len(geo["features"])
            info["choropleth_warnings"] = sorted({str(w.message) for w in caught})
        else:
            info["choropleth"] = "skipped: choropleth requires boundary file"

        points = sorted((c, gaz.population[c], u) for c, u in sub.items() if c in gaz.population and u > 0)
        fit, reason = None, None
        try:
            fit = loglog_fit([(p, u) for _, p, u in points])
        except DegenerateRegressionError as exc:
            reason = str(exc)
        except ValueError as exc:
            reason = str(exc)
        _write_json(kdir / "regression.json", regression_summary(fit, points, reason))
        info["regression"] = "ok" if fit else reason
        summary[kset.name] = info
    return summary


# ---------------------------------------------------------------------------
# full run

def _clean(out: Path) -> None:
    for name in OWNED:
        p = out / name
        if p.is_dir():
            shutil.rmtree(p)
        elif p.exists():
            p.unlink()


def _file_digests(out: Path) -> dict[str, str]:
    return {str(p.relative_to(out)): _sha256(p) for p in sorted(out.rglob("*"))
            if p.is_file() and p.name != "manifest.json"}


def run_pipeline(cfg: PipelineConfig, out: str | Path) -> int:
    """Run every stage into ``out``; 0 on success, 1 on a stage failure."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _clean(out)
    manifest = {
        "package_version": __version__,
        "config_sha256": cfg.digest(),
        "inputs": [{"name": Path(a).name, "sha256": _sha256(Path(a))} for a in cfg.archives],
        "stages": {},
    }
    st = out / "stages"
    current = "setup"
    try:
        current = "ingest"
        manifest["stages"]["ingest"] = stage_ingest(cfg, st / "ingest")
        current = "filter"
        manifest["stages"]["filter"] = stage_filter(cfg, st / "ingest", st / "filter")
        current = "georesolve"
        gaz = load_gazetteer_for(cfg)
        manifest["stages"]["georesolve"] = stage_georesolve(cfg, st / "ingest" / "users.jsonl",
                                                            st / "georesolve", gaz)
        current = "aggregate"
        manifest["stages"]["aggregate"] = stage_aggregate(cfg, st / "filter" / "messages.jsonl",
                                                          st / "georesolve" / "resolutions.csv",
                                                          out / "series", gaz)
        current = "detect"
        manifest["stages"]["detect"] = stage_detect(cfg, out / "series", out / "reports")
        current = "report"
        manifest["stages"]["report"] = stage_report(cfg, out / "series", out / "reports", gaz)
    except Exception as exc:  # noqa: BLE001 - any failure is reported against its stage
        _fail(out, manifest, current, exc)
        return 1
    manifest["status"] = "ok"
    manifest["files"] = _file_digests(out)
    _write_json(out / "manifest.json", manifest)
    return 0


def _fail(out: Path, manifest: dict, stage: str, exc: BaseException) -> None:
    failed = out / "failed"
    failed.mkdir(exist_ok=True)
    for name in OWNED:
        p = out / name
        if name != "failed" and p.exists():
            shutil.move(str(p), str(failed / name))
    manifest["status"] = "failed"
    error = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
    manifest["error"] = error
    _write_json(failed / "error.json", error)
    _write_json(failed / "manifest.json", manifest)


def load_manifest(out: str | Path) -> Mapping:
    return json.loads((Path(out) / "manifest.json").read_text(encoding="utf-8"))
