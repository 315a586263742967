"""Offline geo-resolution of user locations to study regions.

Three resolvers vote independently and :func:`cross_check` reconciles them:

* ``alias``: the free-text location looked up in the gazetteer alias table;
* ``foreign``: the same text looked up in a list of places outside the
  study countries (a hit vetoes the resolution);
* ``coords``: point-in-polygon on the profile coordinates, when both the
  coordinates and boundary polygons are available.

Alias table format (CSV, UTF-8)::

    code,name,country,level,aliases
    ITC4,Lombardia,IT,NUTS2,lombardy|milano|milan|...

Rows with level ``country`` hold the country-only bucket (code = country
code). The optional boundary file is a GeoJSON FeatureCollection with one
(Multi)Polygon feature per region and ``code``/``name``/``population``
properties.
"""
from __future__ import annotations

import csv
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

STUDY_COUNTRIES = ("GB", "DE", "FR", "IT", "ES", "PL", "NL")
# aliases shorter than this only match a whole comma-separated token
MIN_EMBEDDED_ALIAS = 5


class GazetteerError(ValueError):
    pass


@dataclass(frozen=True)
class RegionId:
    code: str
    name: str
    country: str
    level: str


def normalize_place(text: str) -> str:
    """Case fold, turn punctuation into spaces, collapse whitespace."""
    out = []
    for ch in unicodedata.normalize("NFC", text).casefold():
        cat = unicodedata.category(ch)
        if cat[0] in "LN":
            out.append(ch)
        elif ch == ",":
            out.append(ch)
        else:
            out.append(" ")
    return " ".join("".join(out).split()).replace(" ,", ",").replace(", ", ",")


def strip_accents(text: str) -> str:
    return "".join(c for c in unicodedata.normalize("NFD", text) if unicodedata.category(c) != "Mn")


def _tokens(location_text: str) -> list[str]:
    return [t.strip() for t in normalize_place(location_text).split(",") if t.strip()]


class AliasIndex:
    """Normalized alias -> value lookup with an accent-insensitive fallback."""

    def __init__(self, pairs: Iterable[tuple[str, object]]):
        self.exact: dict[str, object] = {}
        loose: dict[str, set] = {}
        for alias, value in pairs:
            key = normalize_place(alias).replace(",", " ")
            if not key:
                continue
            prev = self.exact.get(key)
            if prev is not None and prev != value:
                raise GazetteerError(f"alias {alias!r} maps to more than one place")
            self.exact[key] = value
            loose.setdefault(strip_accents(key), set()).add(value)
        # fallback keys that collide across places are dropped, not guessed
        self.loose = {k: next(iter(v)) for k, v in loose.items() if len(v) == 1}

    def get(self, key: str):
        hit = self.exact.get(key)
        if hit is None:
            hit = self.loose.get(strip_accents(key))
        return hit

    def search(self, location_text: str):
        """Try each comma token left to right (most specific first).

        Within a token the whole token is tried first, then embedded word
        n-grams from longest to shortest; finally the whole string.
        """
        tokens = _tokens(location_text)
        for tok in tokens:
            hit = self.get(tok)
            if hit is not None:
                return hit
            words = tok.split()
            for size in range(len(words) - 1, 0, -1):
                for i in range(len(words) - size + 1):
                    gram = " ".join(words[i:i + size])
                    if len(gram) < MIN_EMBEDDED_ALIAS:
                        continue
                    hit = self.get(gram)
                    if hit is not None:
                        return hit
        if len(tokens) > 1:
            return self.get(" ".join(tokens))
        return None


@dataclass
class Gazetteer:
    regions: dict[str, RegionId]
    index: AliasIndex
    polygons: dict[str, list] = field(default_factory=dict)  # code -> list of rings [(lon, lat), ...]
    population: dict[str, int] = field(default_factory=dict)
    geometry: dict[str, dict] = field(default_factory=dict)  # code -> GeoJSON geometry as loaded
    _bboxes: dict = field(default_factory=dict, repr=False)

    @property
    def entries(self) -> dict[str, RegionId]:
        return self.index.exact

    def region(self, code: str) -> RegionId | None:
        return self.regions.get(code)

    def sub_regions(self):
        return [r for r in self.regions.values() if r.level != "country"]


def _read_alias_rows(text: str):
    reader = csv.DictReader(text.splitlines())
    need = {"code", "name", "country", "level"}
    if not need <= set(reader.fieldnames or ()):
        raise GazetteerError(f"alias table needs columns {sorted(need)}")
    return list(reader)


def load_gazetteer(alias_path: str | Path | None = None, boundary_path: str | Path | None = None,
                   countries: Iterable[str] = STUDY_COUNTRIES) -> Gazetteer:
    """Load and validate an alias table plus optional GeoJSON boundaries.

    With no ``alias_path`` the bundled table of study regions is used.
    """
    if alias_path is None:
        text = resources.files("earlysignal.data").joinpath("regions.csv").read_text(encoding="utf-8")
    else:
        text = Path(alias_path).read_text(encoding="utf-8")
    countries = set(countries)
    regions: dict[str, RegionId] = {}
    pairs = []
    for row in _read_alias_rows(text):
        code = row["code"].strip()
        if code in regions:
            raise GazetteerError(f"duplicate region code {code}")
        region = RegionId(code, row["name"].strip(), row["country"].strip().upper(), row["level"].strip())
        if region.country not in countries:
            raise GazetteerError(f"region {code} lies outside the study countries")
        regions[code] = region
        pairs.append((region.name, region))
        pairs.append((code, region))
        for alias in (row.get("aliases") or "").split("|"):
            if alias.strip():
                pairs.append((alias, region))
    gaz = Gazetteer(regions, AliasIndex(pairs))
    if boundary_path is not None:
        load_boundaries(gaz, boundary_path)
    return gaz


def _rings(geometry: Mapping) -> list:
    kind = geometry.get("type")
    coords = geometry.get("coordinates") or []
    if kind == "Polygon":
        polys = [coords]
    elif kind == "MultiPolygon":
        polys = coords
    else:
        raise GazetteerError(f"unsupported geometry type {kind!r}")
    return [[(float(x), float(y)) for x, y, *_ in ring] for poly in polys for ring in poly]


def load_boundaries(gaz: Gazetteer, path: str | Path) -> None:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    for feat in data.get("features", []):
        props = feat.get("properties") or {}
        code = str(props.get("code", ""))
        if code not in gaz.regions:
            raise GazetteerError(f"boundary feature {code!r} not in alias table")
        gaz.polygons[code] = _rings(feat["geometry"])
        gaz.geometry[code] = feat["geometry"]
        pop = props.get("population")
        if pop is not None:
            if int(pop) <= 0:
                raise GazetteerError(f"population of {code} must be positive")
            gaz.population[code] = int(pop)
    validate_polygons(gaz)
    gaz._bboxes = {c: _bbox(r) for c, r in gaz.polygons.items()}


def validate_polygons(gaz: Gazetteer) -> None:
    """Reject self-intersecting rings and overlapping regions."""
    from shapely.geometry import Polygon
    from shapely.validation import explain_validity

    shapes = {}
    for code, rings in gaz.polygons.items():
        parts = []
        for ring in rings:
            poly = Polygon(ring)
            if not poly.is_valid:
                raise GazetteerError(f"invalid polygon for {code}: {explain_validity(poly)}")
            parts.append(poly)
        # even-odd: rings of one feature combine by symmetric difference
        shape = parts[0]
        for p in parts[1:]:
            shape = shape.symmetric_difference(p)
        shapes[code] = shape
    codes = sorted(shapes)
    for i, a in enumerate(codes):
        for b in codes[i + 1:]:
            if shapes[a].intersection(shapes[b]).area > 1e-12 * max(shapes[a].area, 1.0):
                raise GazetteerError(f"regions {a} and {b} overlap")


def _bbox(rings):
    xs = [x for r in rings for x, _ in r]
    ys = [y for r in rings for _, y in r]
    return min(xs), min(ys), max(xs), max(ys)


def _on_segment(px, py, x1, y1, x2, y2) -> bool:
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    if cross != 0:
        return False
    return min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2)


def point_status(lon: float, lat: float, rings) -> str:
    """``"inside"``, ``"boundary"`` or ``"outside"`` under the even-odd rule."""
    inside = False
    for ring in rings:
        n = len(ring)
        for k in range(n):
            x1, y1 = ring[k]
            x2, y2 = ring[(k + 1) % n]
            if _on_segment(lon, lat, x1, y1, x2, y2):
                return "boundary"
            if (y1 > lat) != (y2 > lat):
                x_cross = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
                if lon < x_cross:
                    inside = not inside
    return "inside" if inside else "outside"


def assign_region(lat: float, lon: float, gazetteer: Gazetteer) -> RegionId | None:
    """Region containing the point; boundary ties go to the smallest code."""
    if not gazetteer.polygons:
        raise GazetteerError("no boundary polygons loaded")
    if not (-90 <= lat <= 90 and -180 <= lon <= 180):
        raise ValueError("coordinates out of range")
    bboxes = gazetteer._bboxes or {c: _bbox(r) for c, r in gazetteer.polygons.items()}
    hits = []
    for code in sorted(gazetteer.polygons):
        x0, y0, x1, y1 = bboxes[code]
        if not (x0 <= lon <= x1 and y0 <= lat <= y1):
            continue
        status = point_status(lon, lat, gazetteer.polygons[code])
        if status == "inside":
            return gazetteer.regions[code]
        if status == "boundary":
            hits.append(code)
    return gazetteer.regions[hits[0]] if hits else None


def resolve_location(location_text: str, gazetteer: Gazetteer) -> RegionId | None:
    if not location_text or not location_text.strip():
        return None
    return gazetteer.index.search(location_text)


def load_foreign_places(path: str | Path | None = None) -> AliasIndex:
    if path is None:
        text = resources.files("earlysignal.data").joinpath("foreign_places.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = csv.DictReader(text.splitlines())
    return AliasIndex((r["alias"], r["country"].strip().upper()) for r in rows)


# ---------------------------------------------------------------------------

RESOLVED, UNRESOLVED, CONFLICT = "resolved", "unresolved", "conflict"


@dataclass(frozen=True)
class Resolution:
    author_id: str
    outcome: str
    region: RegionId | None = None
    candidates: tuple = ()
    votes: tuple = ()  # sorted (resolver, candidate code or None)
    split: bool = False  # resolved by majority rather than unanimously

    def to_row(self) -> dict:
        return {"author_id": self.author_id, "outcome": self.outcome,
                "region": self.region.code if self.region else "",
                "candidates": "|".join(self.candidates),
                "votes": ";".join(f"{k}={v or ''}" for k, v in self.votes),
                "split": int(self.split)}


def cross_check(votes: Mapping[str, str | None], gazetteer: Gazetteer, author_id: str = "") -> Resolution:
    """Reconcile per-resolver candidate codes.

    Abstentions (None) are ignored. Any candidate that is not a study region
    vetoes resolution. A country-only vote agrees with region votes in the
    same country. Unanimity or a strict majority resolves; a tie is a
    conflict.
    """
    frozen = tuple(sorted(votes.items()))
    cast = [c for _, c in frozen if c]
    if not cast:
        return Resolution(author_id, UNRESOLVED, votes=frozen)
    regions = []
    for code in cast:
        r = gazetteer.regions.get(code)
        if r is None or r.country not in STUDY_COUNTRIES:
            return Resolution(author_id, UNRESOLVED, candidates=tuple(sorted(set(cast))), votes=frozen)
        regions.append(r)
    specific = {r.country for r in regions if r.level != "country"}
    regions = [r for r in regions if not (r.level == "country" and r.country in specific)]
    tally = Counter(r.code for r in regions)
    ranked = sorted(tally.items(), key=lambda kv: (-kv[1], kv[0]))
    top_code, top = ranked[0]
    if len(ranked) == 1:
        return Resolution(author_id, RESOLVED, gazetteer.regions[top_code], (top_code,), frozen)
    if top * 2 > len(regions):
        return Resolution(author_id, RESOLVED, gazetteer.regions[top_code],
                          tuple(sorted(tally)), frozen, split=True)
    return Resolution(author_id, CONFLICT, None, tuple(sorted(tally)), frozen)


def resolver_votes(user, gazetteer: Gazetteer, foreign: AliasIndex | None) -> dict[str, str | None]:
    votes: dict[str, str | None] = {}
    hit = resolve_location(user.location_text, gazetteer)
    votes["alias"] = hit.code if hit else None
    if foreign is not None:
        votes["foreign"] = foreign.search(user.location_text) if user.location_text else None
    if gazetteer.polygons and user.lat is not None and user.lon is not None:
        hit = assign_region(user.lat, user.lon, gazetteer)
        votes["coords"] = hit.code if hit else None
    return votes


def resolve_users(users: Iterable, gazetteer: Gazetteer, foreign: AliasIndex | None = None
                  ) -> tuple[dict[str, Resolution], dict]:
    """Resolution per author plus summary metadata (resolution rate etc.)."""
    out = {}
    for u in users:
        out[u.author_id] = cross_check(resolver_votes(u, gazetteer, foreign), gazetteer, u.author_id)
    counts = Counter(r.outcome for r in out.values())
    meta = {"users": len(out), "resolved": counts[RESOLVED], "unresolved": counts[UNRESOLVED],
            "conflict": counts[CONFLICT],
            "split_majority": sum(1 for r in out.values() if r.split),
            "resolution_rate": round(counts[RESOLVED] / len(out), 6) if out else 0.0}
    return out, meta


def write_resolutions(path: str | Path, resolutions: Mapping[str, Resolution]) -> None:
    fields = ["author_id", "outcome", "region", "candidates", "votes", "split"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for author in sorted(resolutions):
            w.writerow(resolutions[author].to_row())


def read_resolved_regions(path: str | Path, gazetteer: Gazetteer) -> dict[str, RegionId]:
    """author id -> RegionId for the resolved rows of a resolutions file."""
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["outcome"] == RESOLVED and row["region"]:
                out[row["author_id"]] = gazetteer.regions[row["region"]]
    return out
