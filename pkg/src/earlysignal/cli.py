"""Command-line entry point.

Each pipeline stage has its own verb so it can be rerun in isolation;
``run`` chains them all into one output tree and ``synth`` writes the
bundled (or a custom) synthetic scenario to disk.

Exit status: 0 success, 1 a stage failed, 2 bad usage or config.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import tomli

from . import __version__
from .config import ConfigError, load_config
from .filters import policy_from_config
from . import pipeline


def _common(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", type=Path, default=default, help="pipeline config (TOML)")
    parser.add_argument("--out", type=Path, default=default, help="output directory")
    parser.add_argument("--method", choices=("ks", "ad"), default=default,
                        help="restrict the per-day scan to one test")
    parser.add_argument("--alpha", type=float, default=default, help="single significance level")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="earlysignal", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(ap, suppress=False)
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, help):
        p = sub.add_parser(name, help=help)
        _common(p, suppress=True)
        return p

    p = verb("ingest", "parse archives into messages and author profiles")
    p.add_argument("--archive", type=Path, nargs="+", help="archive files (default: from config)")
    p.add_argument("--schema", type=Path, help="field-name mapping")

    p = verb("filter", "drop news-like messages")
    p.add_argument("--in", dest="in_dir", type=Path, required=True, help="ingest output directory")
    p.add_argument("--policy", type=Path, help="TOML file with a [filters] table")
    p.add_argument("--stats", type=Path, help="extra copy of the drop tallies")

    p = verb("georesolve", "map authors to regions")
    p.add_argument("--users", type=Path, required=True, help="users.jsonl from ingest")
    p.add_argument("--gazetteer", type=Path, help="alias table (default: bundled regions)")
    p.add_argument("--boundaries", type=Path, help="GeoJSON region boundaries")

    p = verb("aggregate", "build daily series and per-season region user counts")
    p.add_argument("--messages", type=Path, required=True, help="filtered messages.jsonl")
    p.add_argument("--resolutions", type=Path, required=True, help="resolutions.csv from georesolve")

    p = verb("detect", "sliding-window scans, anomaly tables and season tests")
    p.add_argument("--series", type=Path, required=True, help="aggregate output directory")

    p = verb("report", "region tables, cumulative curves, map and regression")
    p.add_argument("--series", type=Path, required=True, help="aggregate output directory")

    p = verb("synth", "write a synthetic corpus with a matching config")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--scenario", type=Path, help="scenario TOML (default: bundled)")

    verb("run", "every stage into one output tree")
    return ap


def _abs(p: Path | None) -> str | None:
    return None if p is None else str(p.resolve())


def _config(args, inputs: dict | None = None):
    over: dict = {}
    if args.method:
        over.setdefault("detect", {})["methods"] = [args.method]
    if args.alpha is not None:
        over.setdefault("detect", {})["alphas"] = [args.alpha]
    if inputs:
        over["inputs"] = {k: v for k, v in inputs.items() if v is not None}
    return load_config(args.config, over or None)


def _need_out(args) -> Path:
    if args.out is None:
        raise ConfigError("--out is required for this command")
    return args.out


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, default=str))


def _synth(args) -> int:
    from .synthgen import load_scenario, write_corpus

    spec, pipe = load_scenario(args.scenario)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    paths = write_corpus(spec, _need_out(args), pipe)
    _print({k: str(v) for k, v in paths.items()})
    return 0


def _run(args) -> int:
    cfg = _config(args)
    out = args.out or cfg.out_dir
    if out is None:
        raise ConfigError("no output directory: pass --out or set [output] dir")
    status = pipeline.run_pipeline(cfg, out)
    if status == 0:
        print(f"ok: {out}")
    else:
        err = json.loads((Path(out) / "failed" / "error.json").read_text(encoding="utf-8"))
        print(f"stage {err['stage']} failed: {err['type']}: {err['message']}", file=sys.stderr)
    return status


def _stage(args) -> int:
    v = args.verb
    if v == "ingest":
        cfg = _config(args, {"archives": [_abs(a) for a in args.archive] if args.archive else None,
                             "schema": _abs(args.schema)})
    elif v == "georesolve":
        cfg = _config(args, {"gazetteer": _abs(args.gazetteer), "boundaries": _abs(args.boundaries)})
    else:
        cfg = _config(args)
    if v == "filter" and args.policy is not None:
        data = tomli.loads(args.policy.read_text(encoding="utf-8"))
        cfg = dataclasses.replace(cfg, filter_policy=policy_from_config(data.get("filters", data)))
    out = _need_out(args)

    try:
        if v == "ingest":
            result = pipeline.stage_ingest(cfg, out)
        elif v == "filter":
            result = pipeline.stage_filter(cfg, args.in_dir, out)
            if args.stats is not None:
                pipeline._write_json(args.stats, result)
        elif v == "georesolve":
            result = pipeline.stage_georesolve(cfg, args.users, out)
        elif v == "aggregate":
            result = pipeline.stage_aggregate(cfg, args.messages, args.resolutions, out)
        elif v == "detect":
            result = pipeline.stage_detect(cfg, args.series, out)
        else:
            result = pipeline.stage_report(cfg, args.series, out)
    except Exception as exc:  # noqa: BLE001
        print(f"stage {v} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _print(result)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "synth":
            return _synth(args)
        if args.verb == "run":
            return _run(args)
        return _stage(args)
    except (ConfigError, tomli.TOMLDecodeError, FileNotFoundError) as exc:
        print(f"earlysignal: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
