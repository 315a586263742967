"""Deterministic synthetic archives with a ground-truth manifest.

Randomness comes from SplitMix64 used in counter mode: a stream key is
derived by folding integer parts into the seed with the SplitMix64 mixer,
and draw ``i`` of a stream is ``mix(key + (i + 1) * GOLDEN)``. All sampling
decisions are integer comparisons on those 64-bit words, so any
implementation reproduces the same corpus bit for bit.

Daily message counts per (keyword set, language) are Binomial(T, lambda/T)
with ``T = 2 * ceil(lambda) + 4`` Bernoulli trials; lambda combines the
base rate, an integer triangular seasonal profile peaking on 15 January,
the region mix and any surge multipliers. Each message then draws its
region, noise category, author and text template.
"""
from __future__ import annotations

import datetime as dt
import hashlib
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .georesolve import load_gazetteer
from .ingest import STUDY_LANGUAGES
from .timeseries import date_in_season, date_range

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

LANGUAGE_COUNTRY = {"en": "GB", "de": "DE", "fr": "FR", "it": "IT", "es": "ES", "pl": "PL", "nl": "NL"}
UNLOCATED = "_unlocated"
FOREIGN = "_foreign"
CATEGORIES = ("clean", "url", "overcap", "keyword")

# stream purposes
_COUNT, _REGION, _CATEGORY, _AUTHOR, _TEXT, _DUP, _BAD, _USER = range(1, 9)


def mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & MASK
    return z ^ (z >> 31)


def stream_key(seed: int, *parts: int) -> int:
    h = mix64((seed + GOLDEN) & MASK)
    for p in parts:
        h = mix64((h ^ (p & MASK)) + GOLDEN & MASK)
    return h


class Stream:
    """Counter-mode SplitMix64 stream."""

    def __init__(self, key: int):
        self.key = key
        self.i = 0

    def next(self) -> int:
        self.i += 1
        return mix64((self.key + self.i * GOLDEN) & MASK)

    def below(self, m: int) -> int:
        """Uniform integer in [0, m) by multiply-shift."""
        return (self.next() * m) >> 64

    def bernoulli(self, num: int, den: int) -> bool:
        return self.next() * den < num << 64


def _milli(x: float) -> int:
    return int(round(x * 1000))


def _bp(x: float) -> int:
    return int(round(x * 10000))


@dataclass(frozen=True)
class Surge:
    scope: str  # region code, country code or "*"
    start: dt.date
    end: dt.date
    multiplier: float
    keyword_set: str | None = None  # None: every keyword set

    def __post_init__(self):
        if self.multiplier < 1:
            raise ValueError("surge multiplier must be >= 1")
        if self.end < self.start:
            raise ValueError("surge ends before it starts")


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int = 1
    seasons: tuple = ("2018-2019", "2019-2020")
    season_start: tuple = (10, 1)
    season_end: tuple = (2, 29)
    # keyword set -> language -> base messages per day
    rates: Mapping[str, Mapping[str, float]] = field(default_factory=lambda: {"pneumonia": {"en": 20.0}})
    seasonal_amplitude: float = 0.0
    surges: tuple = ()
    # country -> region code (or _unlocated / _foreign) -> weight
    region_mix: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    url_fraction: float = 0.0
    overcap_fraction: float = 0.0
    keyword_fraction: float = 0.0
    duplicate_fraction: float = 0.0
    malformed_fraction: float = 0.0
    authors_per_region: int = 40
    coords_fraction: float = 0.0

    def __post_init__(self):
        fr = (self.url_fraction, self.overcap_fraction, self.keyword_fraction)
        if any(not 0 <= f <= 1 for f in fr + (self.duplicate_fraction, self.malformed_fraction,
                                                self.coords_fraction)):
            raise ValueError("fractions must lie in [0, 1]")
        if sum(fr) > 1:
            raise ValueError("noise fractions must sum to at most 1")
        if not 0 <= self.seasonal_amplitude < 1:
            raise ValueError("seasonal_amplitude must lie in [0, 1)")
        for kset, langs in self.rates.items():
            for lang, r in langs.items():
                if lang not in STUDY_LANGUAGES:
                    raise ValueError(f"unknown language {lang!r}")
                if r < 0:
                    raise ValueError("rates must be nonnegative")
        if self.authors_per_region < 1:
            raise ValueError("authors_per_region must be positive")

    def keyword_sets(self) -> list[str]:
        return sorted(self.rates)

    def languages(self) -> list[str]:
        return [l for l in STUDY_LANGUAGES if any(l in r for r in self.rates.values())]

    def regions_for(self, lang: str) -> list[tuple[str, int]]:
        country = LANGUAGE_COUNTRY[lang]
        mix = self.region_mix.get(country) or {country: 1.0}
        return sorted((code, _milli(w)) for code, w in mix.items() if w > 0)

    def season_days(self, label: str) -> list[dt.date]:
        return list(date_range(date_in_season(*self.season_start, label),
                               date_in_season(*self.season_end, label)))

    def all_days(self) -> list[dt.date]:
        return sorted({d for s in self.seasons for d in self.season_days(s)})

    def digest(self) -> str:
        blob = json.dumps(spec_to_dict(self), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def spec_to_dict(spec: ScenarioSpec) -> dict:
    d = asdict(spec)
    d["surges"] = [{**asdict(s), "start": s.start.isoformat(), "end": s.end.isoformat()} for s in spec.surges]
    d["seasons"] = list(spec.seasons)
    d["season_start"] = list(spec.season_start)
    d["season_end"] = list(spec.season_end)
    d["rates"] = {k: dict(v) for k, v in spec.rates.items()}
    d["region_mix"] = {k: dict(v) for k, v in spec.region_mix.items()}
    return d


def spec_from_dict(d: Mapping) -> ScenarioSpec:
    d = dict(d)
    surges = tuple(Surge(s["scope"], _date(s["start"]), _date(s["end"]), float(s["multiplier"]),
                         s.get("keyword_set")) for s in d.pop("surges", ()))
    for k in ("seasons", "season_start", "season_end"):
        if k in d:
            d[k] = tuple(d[k])
    return ScenarioSpec(surges=surges, **d)


def _date(v) -> dt.date:
    return v if isinstance(v, dt.date) else dt.date.fromisoformat(str(v))


def seasonal_permille(day: dt.date, amplitude_permille: int) -> int:
    """Integer triangular profile: peak on 15 Jan, trough half a year away."""
    peak = dt.date(day.year if day.month <= 7 else day.year + 1, 1, 15)
    dist = min(abs((day - peak).days), 182)
    tri = 1000 - (2000 * dist) // 182  # in [-1000, 1000]
    return 1000 + amplitude_permille * tri // 1000


def _surge_permille(spec: ScenarioSpec, day: dt.date, kset: str, region: str, country: str) -> int:
    m = 1000
    for s in spec.surges:
        if s.keyword_set not in (None, kset) or not s.start <= day <= s.end:
            continue
        if s.scope in ("*", region, country):
            m = m * _milli(s.multiplier) // 1000
    return m


@dataclass(frozen=True)
class Event:
    day: dt.date
    seq: int
    keyword_set: str
    language: str
    region: str
    category: str
    author: str
    template: int


def _day_lambda(spec: ScenarioSpec, day: dt.date, kset: str, lang: str, seas: int):
    """(num, den, regions, weights): lambda = num / den messages for the day."""
    base = _milli(spec.rates[kset].get(lang, 0.0))
    country = LANGUAGE_COUNTRY[lang]
    regions = spec.regions_for(lang)
    share_total = sum(w for _, w in regions)
    weights = [w * _surge_permille(spec, day, kset, code, country) for code, w in regions]
    num = base * seas * sum(weights)
    den = 1000 * 1000 * share_total * 1000
    return num, den, regions, weights


def _draw_count(spec: ScenarioSpec, day: dt.date, ki: int, li: int, num: int, den: int) -> int:
    trials = 2 * (-(-num // den)) + 4
    counter = Stream(stream_key(spec.seed, _COUNT, day.toordinal(), ki, li))
    return sum(counter.bernoulli(num, den * trials) for _ in range(trials))


def daily_counts(spec: ScenarioSpec, keyword_set: str, language: str | None = None) -> dict[dt.date, int]:
    """Per-day message totals, identical to those of :func:`sample_events`, without rendering."""
    amp = _milli(spec.seasonal_amplitude)
    ki = spec.keyword_sets().index(keyword_set)
    out = {}
    for day in spec.all_days():
        seas = seasonal_permille(day, amp)
        n = 0
        for li, lang in enumerate(STUDY_LANGUAGES):
            if language not in (None, lang) or _milli(spec.rates[keyword_set].get(lang, 0.0)) == 0:
                continue
            num, den, _, _ = _day_lambda(spec, day, keyword_set, lang, seas)
            n += _draw_count(spec, day, ki, li, num, den)
        out[day] = n
    return out


def sample_events(spec: ScenarioSpec) -> list[Event]:
    """All messages of the scenario, ordered by (day, sequence)."""
    events = []
    amp = _milli(spec.seasonal_amplitude)
    ksets = spec.keyword_sets()
    bp = (_bp(spec.url_fraction), _bp(spec.overcap_fraction), _bp(spec.keyword_fraction))
    for day in spec.all_days():
        seq = 0
        seas = seasonal_permille(day, amp)
        for ki, kset in enumerate(ksets):
            for li, lang in enumerate(STUDY_LANGUAGES):
                if _milli(spec.rates[kset].get(lang, 0.0)) == 0:
                    continue
                num, den, regions, weights = _day_lambda(spec, day, kset, lang, seas)
                n = _draw_count(spec, day, ki, li, num, den)
                if n == 0:
                    continue
                rs = Stream(stream_key(spec.seed, _REGION, day.toordinal(), ki, li))
                cs = Stream(stream_key(spec.seed, _CATEGORY, day.toordinal(), ki, li))
                au = Stream(stream_key(spec.seed, _AUTHOR, day.toordinal(), ki, li))
                tx = Stream(stream_key(spec.seed, _TEXT, day.toordinal(), ki, li))
                wsum = sum(weights)
                for _ in range(n):
                    x = rs.below(wsum)
                    for (code, _), w in zip(regions, weights):
                        if x < w:
                            break
                        x -= w
                    c = cs.below(10000)
                    if c < bp[0]:
                        cat = "url"
                    elif c < bp[0] + bp[1]:
                        cat = "overcap"
                    elif c < sum(bp):
                        cat = "keyword"
                    else:
                        cat = "clean"
                    author = _pick_author(spec, au, cat, lang, code)
                    events.append(Event(day, seq, kset, lang, code, cat, author, tx.below(1 << 16)))
                    seq += 1
    return events


def _pick_author(spec: ScenarioSpec, stream: Stream, category: str, lang: str, region: str) -> str:
    if category == "url":
        return f"news-{lang}-{stream.below(5):02d}"
    if category == "overcap":
        return f"celeb-{lang}-{stream.below(5):02d}"
    return f"u-{lang}-{region.strip('_')}-{stream.below(spec.authors_per_region):03d}"


# ---------------------------------------------------------------------------
# text and profile rendering

KEYWORDS = {
    "pneumonia": {"en": "pneumonia", "de": "Lungenentzündung", "fr": "pneumonie", "it": "polmonite",
                  "es": "neumonía", "pl": "zapalenie płuc", "nl": "longontsteking"},
    "dry_cough": {"en": "dry cough", "de": "trockener Husten", "fr": "toux sèche", "it": "tosse secca",
                  "es": "tos seca", "pl": "suchy kaszel", "nl": "droge hoest"},
    "coronavirus": {"en": "coronavirus", "de": "Coronavirus", "fr": "coronavirus", "it": "coronavirus",
                    "es": "coronavirus", "pl": "koronawirus", "nl": "coronavirus"},
}

_TEMPLATES = {
    "en": ("My dad is in hospital with {kw} again", "Half the office is off with {kw}",
           "Doctor says it is probably {kw}", "Third week of {kw} and still exhausted"),
    "de": ("Mein Vater liegt wieder mit {kw} im Krankenhaus", "Das halbe Büro hat {kw}",
           "Der Arzt meint, es ist {kw}", "Dritte Woche {kw} und immer noch erschöpft"),
    "fr": ("Mon père est à l'hôpital avec une {kw}", "La moitié du bureau a une {kw}",
           "Le médecin pense que c'est une {kw}", "Troisième semaine de {kw}, toujours épuisé"),
    "it": ("Mio padre è in ospedale con la {kw}", "Mezzo ufficio a casa con la {kw}",
           "Il medico dice che è {kw}", "Terza settimana di {kw}, sono distrutto"),
    "es": ("Mi padre está en el hospital con {kw}", "Medio trabajo de baja por {kw}",
           "El médico dice que es {kw}", "Tercera semana con {kw} y sigo agotado"),
    "pl": ("Tata znowu w szpitalu, {kw}", "Pół biura ma {kw}",
           "Lekarz mówi, że to {kw}", "Trzeci tydzień {kw} i dalej bez sił"),
    "nl": ("Mijn vader ligt weer in het ziekenhuis met {kw}", "Half kantoor heeft {kw}",
           "De dokter denkt dat het {kw} is", "Derde week {kw} en nog steeds uitgeput"),
}

_EXCLUDED_WORD = {"en": "China", "de": "China", "fr": "Chine", "it": "la Cina", "es": "China",
                  "pl": "Chiny", "nl": "China"}

_UNLOCATED_TEXTS = ("", "somewhere", "🌍 planet earth", "home", "the moon", "in my head")
_FOREIGN_TEXTS = {"en": ("New York, USA", "Toronto, Canada", "Sydney, Australia", "Dublin, Ireland"),
                  "es": ("Buenos Aires, Argentina", "Ciudad de México", "Bogotá, Colombia"),
                  "fr": ("Montréal, Québec", "Bruxelles, Belgique", "Dakar, Sénégal")}


def render_text(ev: Event, message_id: str) -> str:
    kw = KEYWORDS.get(ev.keyword_set, {}).get(ev.language, ev.keyword_set.replace("_", " "))
    templates = _TEMPLATES[ev.language]
    body = templates[ev.template % len(templates)].format(kw=kw)
    if ev.category == "url":
        return f"{kw}: https://news.example.org/{ev.language}/{message_id}"
    if ev.category == "keyword":
        return f"{body} ({_EXCLUDED_WORD[ev.language]})"
    return body


def _location_variants(gaz, code: str) -> list[str]:
    region = gaz.regions[code]
    aliases = [a for a, r in gaz.index.exact.items() if r is region and len(a) >= 5]
    aliases = sorted(aliases)[:3]
    return [region.name] + [f"{a.title()}, {region.name}" for a in aliases]


def author_profiles(spec: ScenarioSpec, events: Sequence[Event], boxes: Mapping[str, tuple] | None = None
                    ) -> dict[str, dict]:
    """Deterministic profile per author appearing in ``events``."""
    gaz = load_gazetteer()
    out = {}
    for author in sorted({e.author for e in events}):
        s = Stream(stream_key(spec.seed, _USER, int(hashlib.sha256(author.encode()).hexdigest()[:15], 16)))
        kind, lang, *rest = author.split("-")
        prof = {"user_id": author, "friends_count": s.below(3000), "statuses_count": 1 + s.below(50000)}
        region = None
        if kind == "news":
            prof["followers_count"] = 200 + s.below(1800)
            prof["location"] = gaz.regions[LANGUAGE_COUNTRY[lang]].name
        elif kind == "celeb":
            prof["followers_count"] = 2000 + s.below(50000)
            if rest == ["00"]:
                prof["followers_count"] = 2000  # planted cap boundary: dropped
            prof["location"] = gaz.regions[LANGUAGE_COUNTRY[lang]].name
        else:
            prof["followers_count"] = s.below(2000)
            if rest[-1] == "000":
                prof["followers_count"] = 1999  # planted cap boundary: kept
            code = rest[0]
            if code == UNLOCATED.strip("_"):
                prof["location"] = _UNLOCATED_TEXTS[s.below(len(_UNLOCATED_TEXTS))]
            elif code == FOREIGN.strip("_"):
                texts = _FOREIGN_TEXTS.get(lang, ("New York, USA",))
                prof["location"] = texts[s.below(len(texts))]
            else:
                region = code
                variants = _location_variants(gaz, code)
                prof["location"] = variants[s.below(len(variants))]
                if boxes and code in boxes and s.below(10000) < _bp(spec.coords_fraction):
                    x0, y0, x1, y1 = boxes[code]
                    fx, fy = 1000 + s.below(8000), 1000 + s.below(8000)
                    prof["lon"] = round(x0 + (x1 - x0) * fx / 10000, 6)
                    prof["lat"] = round(y0 + (y1 - y0) * fy / 10000, 6)
        prof["_region"] = region
        out[author] = prof
    return out


def toy_boundaries(spec: ScenarioSpec) -> tuple[dict, dict]:
    """Schematic 1x1 degree squares, one row per country; not real geography.

    Populations are proportional to each region's weight in the mix.
    """
    gaz = load_gazetteer()
    features, boxes = [], {}
    countries = [c for c in ("GB", "DE", "FR", "IT", "ES", "PL", "NL")]
    for row, country in enumerate(countries):
        mix = spec.region_mix.get(country, {})
        codes = sorted(c for c in mix if not c.startswith("_") and c in gaz.regions)
        for col, code in enumerate(codes):
            x0, y0 = -10.0 + col, 36.0 + 2 * row
            box = (x0, y0, x0 + 1.0, y0 + 1.0)
            boxes[code] = box
            ring = [[box[0], box[1]], [box[2], box[1]], [box[2], box[3]], [box[0], box[3]], [box[0], box[1]]]
            features.append({"type": "Feature",
                             "properties": {"code": code, "name": gaz.regions[code].name,
                                            "population": 50_000 * max(1, _milli(mix[code]))},
                             "geometry": {"type": "Polygon", "coordinates": [ring]}})
    return {"type": "FeatureCollection", "features": features}, boxes


def _malformed_line(kind: int, ev: Event, mid: str) -> tuple[str, str]:
    if kind == 0:
        return "unparseable", '{"id": "' + mid + '-bad", "text": '
    if kind == 1:
        return "bad_language", json.dumps({"id": mid + "-pt", "user_id": "x", "text": "pneumonia",
                                           "created_at": f"{ev.day.isoformat()}T12:00:00Z", "lang": "pt",
                                           "keyword_set": ev.keyword_set})
    return "bad_timestamp", json.dumps({"id": mid + "-ts", "user_id": "x", "text": "pneumonia",
                                        "created_at": "yesterday", "lang": ev.language,
                                        "keyword_set": ev.keyword_set})


def generate_corpus(spec: ScenarioSpec) -> tuple[list[str], dict, dict]:
    """Archive lines, ground-truth manifest and boundary GeoJSON for ``spec``."""
    events = sample_events(spec)
    geojson, boxes = toy_boundaries(spec)
    profiles = author_profiles(spec, events, boxes)
    dup = Stream(stream_key(spec.seed, _DUP))
    bad = Stream(stream_key(spec.seed, _BAD))
    dup_bp, bad_bp = _bp(spec.duplicate_fraction), _bp(spec.malformed_fraction)

    lines = []
    malformed = defaultdict(int)
    duplicates = 0
    planted = {k: {c: 0 for c in CATEGORIES} for k in spec.keyword_sets()}
    day_index = {d: i for i, d in enumerate(spec.all_days())}
    daily = defaultdict(lambda: [0] * len(day_index))
    for ev in events:
        mid = f"{ev.day:%Y%m%d}-{ev.seq:05d}"
        prof = profiles[ev.author]
        obj = {"id": mid, "user_id": ev.author,
               "created_at": f"{ev.day.isoformat()}T{(ev.template % 24):02d}:{(ev.template // 24) % 60:02d}:00Z",
               "text": render_text(ev, mid), "lang": ev.language, "keyword_set": ev.keyword_set,
               "followers_count": prof["followers_count"], "friends_count": prof["friends_count"],
               "statuses_count": prof["statuses_count"], "location": prof["location"]}
        if "lat" in prof:
            obj["lat"], obj["lon"] = prof["lat"], prof["lon"]
        line = json.dumps(obj, ensure_ascii=False, sort_keys=True)
        lines.append(line)
        planted[ev.keyword_set][ev.category] += 1
        daily[(ev.keyword_set, ev.language, ev.region, ev.category)][day_index[ev.day]] += 1
        if dup.below(10000) < dup_bp:
            lines.append(line)
            duplicates += 1
        if bad.below(10000) < bad_bp:
            reason, garbage = _malformed_line(bad.below(3), ev, mid)
            lines.append(garbage)
            malformed[reason] += 1

    days = spec.all_days()
    manifest = {
        "seed": spec.seed,
        "spec_digest": spec.digest(),
        "spec": spec_to_dict(spec),
        "archive_lines": len(lines),
        "unique_messages": len(events),
        "duplicates": duplicates,
        "malformed": dict(sorted(malformed.items())),
        "unique_users": len(profiles),
        "planted": planted,
        "first_day": days[0].isoformat() if days else None,
        "days": [d.isoformat() for d in days],
        "daily": [{"keyword_set": k, "language": l, "region": r, "category": c, "counts": v}
                  for (k, l, r, c), v in sorted(daily.items())],
        "author_regions": {a: p["_region"] for a, p in sorted(profiles.items())},
        "surges": [{**asdict(s), "start": s.start.isoformat(), "end": s.end.isoformat()} for s in spec.surges],
    }
    return lines, manifest, geojson


def daily_plan(manifest: Mapping, keyword_set: str, *, language: str | None = None,
               region: str | None = None, categories: Sequence[str] = CATEGORIES) -> dict[dt.date, int]:
    """Per-day planned message counts filtered by the given attributes."""
    days = [dt.date.fromisoformat(d) for d in manifest["days"]]
    out = dict.fromkeys(days, 0)
    for row in manifest["daily"]:
        if row["keyword_set"] != keyword_set or row["category"] not in categories:
            continue
        if language is not None and row["language"] != language:
            continue
        if region is not None and row["region"] != region:
            continue
        for d, v in zip(days, row["counts"]):
            out[d] += v
    return out


def scenario_config(spec: ScenarioSpec, overrides: Mapping | None = None) -> dict:
    """Pipeline config for a written corpus (paths relative to the corpus directory)."""
    days = spec.all_days()
    cfg = {
        "study": {"start": days[0], "end": days[-1], "focal_season": spec.seasons[-1],
                  "languages": spec.languages()},
        "inputs": {"archives": ["archive.jsonl"], "boundaries": "boundaries.geojson"},
        "keywords": {k: dict(KEYWORDS_CONFIG[k]) for k in spec.keyword_sets() if k in KEYWORDS_CONFIG},
    }
    for k, v in (overrides or {}).items():
        cfg[k] = {**cfg.get(k, {}), **v} if isinstance(v, Mapping) else v
    return cfg


# keyword tables matching the rendered texts
KEYWORDS_CONFIG = {
    name: {lang: [kw] for lang, kw in words.items()} for name, words in KEYWORDS.items()
}
KEYWORDS_CONFIG["dry_cough"]["merge_languages"] = True
KEYWORDS_CONFIG["dry_cough"]["region_window"] = "summary"
KEYWORDS_CONFIG["coronavirus"]["region_window"] = "summary"


def write_corpus(spec: ScenarioSpec, out_dir: str | Path, pipeline: Mapping | None = None) -> dict[str, Path]:
    """Write archive.jsonl, manifest.json, boundaries.geojson and config.toml."""
    import tomli_w

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines, manifest, geojson = generate_corpus(spec)
    paths = {"archive": out / "archive.jsonl", "manifest": out / "manifest.json",
             "boundaries": out / "boundaries.geojson", "config": out / "config.toml"}
    paths["archive"].write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    paths["manifest"].write_text(json.dumps(manifest, sort_keys=True, indent=1, ensure_ascii=False) + "\n",
                                 encoding="utf-8")
    paths["boundaries"].write_text(json.dumps(geojson, sort_keys=True, indent=1, ensure_ascii=False) + "\n",
                                   encoding="utf-8")
    paths["config"].write_text(tomli_w.dumps(scenario_config(spec, pipeline)), encoding="utf-8")
    return paths


def load_scenario(path: str | Path | None = None) -> tuple[ScenarioSpec, dict]:
    """(spec, pipeline overrides) from a scenario TOML; the bundled scenario by default."""
    import tomli
    if path is None:
        from importlib import resources
        text = resources.files("earlysignal.data").joinpath("scenario.toml").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = tomli.loads(text)
    return spec_from_dict(data.get("scenario", {})), dict(data.get("pipeline", {}))
