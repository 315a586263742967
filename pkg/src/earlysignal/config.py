"""Pipeline configuration (TOML).

Relative paths are resolved against the directory of the config file.
Every key has a default, so an empty file plus ``[inputs] archives`` is a
valid config. See ``data/default_config.toml`` for the documented layout.
"""
from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

import tomli

from .filters import NEWS_CUTOFF, FilterPolicy, policy_from_config
from .ingest import STUDY_END, STUDY_LANGUAGES, STUDY_START
from .stattests.ks import EXACT_LIMIT
from .stattests.scan import ScanOptions

DEFAULT_KEYWORDS = {
    "pneumonia": {"en": ["pneumonia"], "de": ["Lungenentzündung", "Pneumonie"], "fr": ["pneumonie"],
                  "it": ["polmonite"], "es": ["neumonía", "neumonia"], "pl": ["zapalenie płuc"],
                  "nl": ["longontsteking"]},
    "dry_cough": {"en": ["dry cough"], "de": ["trockener Husten"], "fr": ["toux sèche"],
                  "it": ["tosse secca"], "es": ["tos seca"], "pl": ["suchy kaszel"], "nl": ["droge hoest"]},
    "coronavirus": {lang: ["coronavirus"] for lang in STUDY_LANGUAGES} | {"pl": ["koronawirus"]},
}

COUNTRY_OF_LANGUAGE = {"en": "GB", "de": "DE", "fr": "FR", "it": "IT", "es": "ES", "pl": "PL", "nl": "NL"}
COUNTRY_NAMES = {"GB": "UK", "DE": "Germany", "FR": "France", "IT": "Italy", "ES": "Spain",
                 "PL": "Poland", "NL": "The Netherlands"}


class ConfigError(ValueError):
    pass


def _month_day(v) -> tuple[int, int]:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        m, d = int(v[0]), int(v[1])
    else:
        try:
            m, d = (int(x) for x in str(v).split("-"))
        except ValueError:
            raise ConfigError(f"expected MM-DD, got {v!r}") from None
    try:
        dt.date(2000, m, d)  # validates, 2000 is a leap year
    except ValueError as exc:
        raise ConfigError(f"bad month-day {v!r}: {exc}") from None
    return m, d


def _date(v) -> dt.date:
    if isinstance(v, dt.date):
        return v
    return dt.date.fromisoformat(str(v))


@dataclass(frozen=True)
class KeywordSet:
    name: str
    words: Mapping[str, tuple]
    merge_languages: bool = False
    region_window: str = "anchor"  # anchor | summary: window used for region user tables and maps


@dataclass(frozen=True)
class PipelineConfig:
    archives: tuple
    base_dir: Path = Path(".")
    schema: Path | None = None
    gazetteer: Path | None = None
    boundaries: Path | None = None
    foreign_places: Path | None = None
    languages: tuple = STUDY_LANGUAGES
    study_start: dt.date = STUDY_START
    study_end: dt.date = STUDY_END
    focal_season: str = "2019-2020"
    keyword_sets: tuple = ()
    anchor_start: tuple = (12, 15)
    anchor_end: tuple = (1, 21)
    summary_start: tuple = (12, 1)
    summary_end: tuple = (1, 30)
    scan: ScanOptions = ScanOptions()
    methods: tuple = ("ks", "ad")
    alphas: tuple = (0.05, 0.10)
    n_baselines: int = 1
    season_test_baselines: int = 5
    scan_by: str = "language"
    cutoff: dt.date = NEWS_CUTOFF
    allow_post_cutoff: bool = False
    filter_policy: FilterPolicy = FilterPolicy()
    min_users: int = 10
    only_increases: bool = True
    max_malformed_fraction: float = 0.5
    out_dir: Path | None = None
    raw: Mapping = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for a in self.alphas:
            if not 0 < a < 1:
                raise ConfigError(f"alpha must lie in (0, 1), got {a}")
        if not self.alphas:
            raise ConfigError("at least one alpha level is required")
        if not self.methods or any(m not in ("ks", "ad") for m in self.methods):
            raise ConfigError("methods must be a non-empty subset of ['ks', 'ad']")
        if self.scan_by not in ("language", "country"):
            raise ConfigError("scan_by must be 'language' or 'country'")
        if self.n_baselines < 1 or self.season_test_baselines < 1:
            raise ConfigError("baseline counts must be positive")
        if self.study_end < self.study_start:
            raise ConfigError("study end precedes study start")
        for p in (*self.archives, self.schema, self.gazetteer, self.boundaries, self.foreign_places):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"configured path does not exist: {p}")
        unknown = [l for l in self.languages if l not in STUDY_LANGUAGES]
        if unknown:
            raise ConfigError(f"unsupported languages: {unknown}")

    def keyword_map(self) -> dict[str, list[str]]:
        """keyword set -> every configured keyword, all languages pooled."""
        return {k.name: sorted({w for ws in k.words.values() for w in ws}) for k in self.keyword_sets}

    def digest(self) -> str:
        blob = json.dumps(_canonical(self.raw), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _canonical(obj):
    if isinstance(obj, Mapping):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (dt.date, dt.datetime)):
        return obj.isoformat()
    return obj


def default_config_text() -> str:
    return resources.files("earlysignal.data").joinpath("default_config.toml").read_text(encoding="utf-8")


def _merge(base: dict, over: Mapping) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | Path | None = None, overrides: Mapping | None = None) -> PipelineConfig:
    """Read ``path`` layered over the bundled defaults."""
    data = tomli.loads(default_config_text())
    base_dir = Path(".")
    if path is not None:
        path = Path(path)
        try:
            user = tomli.loads(path.read_text(encoding="utf-8"))
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        # a config that lists its own keyword sets replaces the default ones
        if "keywords" in user:
            data.pop("keywords", None)
        data = _merge(data, user)
        base_dir = path.parent
    if overrides:
        data = _merge(data, overrides)
    return config_from_dict(data, base_dir)


def config_from_dict(data: Mapping, base_dir: Path = Path(".")) -> PipelineConfig:
    def path_or_none(v):
        if v in (None, ""):
            return None
        p = Path(v)
        return p if p.is_absolute() else base_dir / p

    inputs = data.get("inputs", {})
    det = data.get("detect", {})

    archives = inputs.get("archives", [])
    if isinstance(archives, str):
        archives = [archives]
    ksets = []
    for name, langs in sorted(data.get("keywords", DEFAULT_KEYWORDS).items()):
        langs = dict(langs)
        merge = bool(langs.pop("merge_languages", False))
        region_window = str(langs.pop("region_window", "anchor"))
        if region_window not in ("anchor", "summary"):
            raise ConfigError(f"keyword set {name}: region_window must be 'anchor' or 'summary'")
        words = {l: tuple(w if isinstance(w, list) else [w]) for l, w in sorted(langs.items())}
        bad = [l for l in words if l not in STUDY_LANGUAGES]
        if bad:
            raise ConfigError(f"keyword set {name}: unsupported languages {bad}")
        ksets.append(KeywordSet(name, words, merge, region_window))
    if not ksets:
        raise ConfigError("no keyword sets configured")

    methods = det.get("methods", ["ks", "ad"])
    if isinstance(methods, str):
        methods = [methods]
    methods = tuple(str(m) for m in methods)
    try:
        scan = ScanOptions(int(det.get("w_min", 50)), int(det.get("w_max", 70)), methods[0] if methods else "ks",
                           str(det.get("sample_mode", "tweets")), int(det.get("exact_limit", EXACT_LIMIT)),
                           str(det.get("ad_interpolation", "quadratic")))
        policy = policy_from_config(data.get("filters", {}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    try:
        return _build(data, base_dir, archives, ksets, methods, scan, policy, path_or_none)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _build(data, base_dir, archives, ksets, methods, scan, policy, path_or_none) -> PipelineConfig:
    study = data.get("study", {})
    inputs = data.get("inputs", {})
    season = data.get("season", {})
    det = data.get("detect", {})
    rep = data.get("report", {})
    out = data.get("output", {})
    return PipelineConfig(
        archives=tuple(path_or_none(a) for a in archives),
        base_dir=base_dir,
        schema=path_or_none(inputs.get("schema")),
        gazetteer=path_or_none(inputs.get("gazetteer")),
        boundaries=path_or_none(inputs.get("boundaries")),
        foreign_places=path_or_none(inputs.get("foreign_places")),
        languages=tuple(study.get("languages", STUDY_LANGUAGES)),
        study_start=_date(study.get("start", STUDY_START)),
        study_end=_date(study.get("end", STUDY_END)),
        focal_season=str(study.get("focal_season", "2019-2020")),
        keyword_sets=tuple(ksets),
        anchor_start=_month_day(season.get("anchor_start", "12-15")),
        anchor_end=_month_day(season.get("anchor_end", "01-21")),
        summary_start=_month_day(season.get("summary_start", "12-01")),
        summary_end=_month_day(season.get("summary_end", "01-30")),
        scan=scan,
        methods=methods,
        alphas=tuple(float(a) for a in det.get("alphas", (0.05, 0.10))),
        n_baselines=int(det.get("n_baselines", 1)),
        season_test_baselines=int(det.get("season_test_baselines", 5)),
        scan_by=str(det.get("scan_by", "language")),
        cutoff=_date(det.get("cutoff", NEWS_CUTOFF)),
        allow_post_cutoff=bool(det.get("allow_post_cutoff", False)),
        filter_policy=policy,
        min_users=int(rep.get("min_users", 10)),
        only_increases=bool(rep.get("only_increases", True)),
        max_malformed_fraction=float(inputs.get("max_malformed_fraction", 0.5)),
        out_dir=path_or_none(out.get("dir")),
        raw=_strip_paths(data),
    )


def _strip_paths(data: Mapping) -> dict:
    # the hash covers settings, not where the files happen to live
    d = _canonical(data)
    d.pop("output", None)
    return d
