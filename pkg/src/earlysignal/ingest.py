"""Archive ingestion: parse line-delimited message dumps, validate and dedup.

Each line is one JSON object. Field names default to::

    id, user_id, created_at, text, lang, followers_count, friends_count,
    statuses_count, location, keyword_set, lat, lon

and can be renamed through a schema mapping (canonical name -> source field,
dotted paths reach into nested objects, e.g. ``"user.followers_count"``).

Every record carrying a distinct message id is counted, retweets included.
"""
from __future__ import annotations

import datetime as dt
import enum
import gzip
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

STUDY_LANGUAGES = ("en", "de", "fr", "it", "es", "pl", "nl")
STUDY_START = dt.date(2014, 12, 1)
STUDY_END = dt.date(2020, 3, 1)

CANONICAL_FIELDS = ("id", "user_id", "created_at", "text", "lang", "followers_count",
                    "friends_count", "statuses_count", "location", "keyword_set",
                    "lat", "lon")
REQUIRED_FIELDS = ("id", "user_id", "created_at", "text", "lang")


class CorruptArchiveError(RuntimeError):
    pass


class Rejection(str, enum.Enum):
    UNPARSEABLE = "unparseable"
    MISSING_FIELD = "missing_field"
    BAD_TIMESTAMP = "bad_timestamp"
    BAD_LANGUAGE = "bad_language"
    OUT_OF_RANGE = "out_of_range"
    NO_KEYWORD_SET = "no_keyword_set"
    BAD_USER_FIELD = "bad_user_field"


@dataclass(frozen=True)
class MessageRecord:
    message_id: str
    author_id: str
    posted_at: dt.datetime
    text: str
    language: str
    matched_keyword_set: str

    @property
    def day(self) -> dt.date:
        return self.posted_at.date()

    def to_json(self) -> dict:
        return {"id": self.message_id, "user_id": self.author_id,
                "created_at": self.posted_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "text": self.text, "lang": self.language,
                "keyword_set": self.matched_keyword_set}


@dataclass(frozen=True)
class UserProfile:
    author_id: str
    followers: int = 0
    friends: int = 0
    statuses: int = 0
    location_text: str = ""
    lat: float | None = None
    lon: float | None = None

    def to_json(self) -> dict:
        out = {"user_id": self.author_id, "followers_count": self.followers,
               "friends_count": self.friends, "statuses_count": self.statuses,
               "location": self.location_text}
        if self.lat is not None and self.lon is not None:
            out["lat"], out["lon"] = self.lat, self.lon
        return out


@dataclass
class ArchiveStats:
    total_records: int = 0
    unique_messages: int = 0
    unique_users: int = 0
    rejected_malformed: int = 0
    duplicates: int = 0
    rejections: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        out["rejections"] = dict(sorted(self.rejections.items()))
        return out


@dataclass(frozen=True)
class IngestOptions:
    languages: tuple = STUDY_LANGUAGES
    study_start: dt.date = STUDY_START
    study_end: dt.date = STUDY_END
    # keyword set -> keywords, used only when a record has no keyword_set field
    keyword_sets: Mapping[str, Sequence[str]] | None = None
    max_malformed_fraction: float = 0.5


# ---------------------------------------------------------------------------

def _lookup(raw: Mapping, path: str):
    cur = raw
    for part in path.split("."):
        if not isinstance(cur, Mapping) or part not in cur:
            return None
        cur = cur[part]
    return cur


def remap(raw: Mapping, schema: Mapping[str, str] | None) -> dict:
    """Project a source object onto canonical field names."""
    schema = schema or {}
    return {name: _lookup(raw, schema.get(name, name)) for name in CANONICAL_FIELDS}


_TWITTER_FMT = "%a %b %d %H:%M:%S %z %Y"


def parse_timestamp(value) -> dt.datetime | None:
    """ISO-8601 (``Z`` suffix allowed), legacy Twitter format, or epoch seconds."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return dt.datetime.fromtimestamp(int(value), tz=dt.timezone.utc)
    if not isinstance(value, str) or not value.strip():
        return None
    s = value.strip()
    try:
        ts = dt.datetime.fromisoformat(s[:-1] + "+00:00" if s.endswith("Z") else s)
    except ValueError:
        try:
            ts = dt.datetime.strptime(s, _TWITTER_FMT)
        except ValueError:
            return None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=dt.timezone.utc)
    return ts.astimezone(dt.timezone.utc).replace(microsecond=0)


def classify_keyword_set(text: str, keyword_sets: Mapping[str, Sequence[str]]) -> str | None:
    folded = text.casefold()
    for name, words in keyword_sets.items():
        if any(w.casefold() in folded for w in words):
            return name
    return None


def validate_record(raw: Mapping, options: IngestOptions = IngestOptions()) -> MessageRecord | Rejection:
    """Check a remapped record against the message invariants."""
    for name in REQUIRED_FIELDS:
        v = raw.get(name)
        if v is None or (isinstance(v, str) and not v.strip() and name != "text"):
            return Rejection.MISSING_FIELD
    ts = parse_timestamp(raw["created_at"])
    if ts is None:
        return Rejection.BAD_TIMESTAMP
    lang = str(raw["lang"]).strip().lower()
    if lang not in options.languages:
        return Rejection.BAD_LANGUAGE
    if not options.study_start <= ts.date() <= options.study_end:
        return Rejection.OUT_OF_RANGE
    text = str(raw["text"])
    kset = raw.get("keyword_set")
    if not kset:
        kset = classify_keyword_set(text, options.keyword_sets or {})
        if kset is None:
            return Rejection.NO_KEYWORD_SET
    return MessageRecord(str(raw["id"]), str(raw["user_id"]), ts, text, lang, str(kset))


def _count(value) -> int:
    if value is None or value == "":
        return 0
    n = int(value)
    if n < 0:
        raise ValueError("negative count")
    return n


def user_from_raw(raw: Mapping) -> UserProfile:
    lat, lon = raw.get("lat"), raw.get("lon")
    if lat is not None and lon is not None:
        lat, lon = float(lat), float(lon)
        if not (-90 <= lat <= 90 and -180 <= lon <= 180):
            lat = lon = None
    else:
        lat = lon = None
    return UserProfile(str(raw["user_id"]), _count(raw.get("followers_count")),
                       _count(raw.get("friends_count")), _count(raw.get("statuses_count")),
                       str(raw.get("location") or ""), lat, lon)


def parse_archive(lines: Iterable[str], schema: Mapping[str, str] | None = None,
                  options: IngestOptions = IngestOptions()
                  ) -> tuple[list[MessageRecord], list[UserProfile], ArchiveStats]:
    """Parse, validate and deduplicate a line stream (first occurrence wins).

    Malformed lines are tallied by reason; if their share exceeds
    ``options.max_malformed_fraction`` the archive is rejected as corrupt.
    """
    stats = ArchiveStats()
    messages: dict[str, MessageRecord] = {}
    users: dict[str, UserProfile] = {}
    for line in lines:
        if not line.strip():
            continue
        stats.total_records += 1
        reason = None
        try:
            obj = json.loads(line)
            if not isinstance(obj, dict):
                raise ValueError
        except ValueError:
            reason = Rejection.UNPARSEABLE
        if reason is None:
            raw = remap(obj, schema)
            result = validate_record(raw, options)
            if isinstance(result, Rejection):
                reason = result
            else:
                try:
                    user = user_from_raw(raw)
                except (TypeError, ValueError):
                    reason = Rejection.BAD_USER_FIELD
        if reason is not None:
            stats.rejected_malformed += 1
            stats.rejections[reason.value] = stats.rejections.get(reason.value, 0) + 1
            continue
        if result.message_id in messages:
            stats.duplicates += 1
            continue
        messages[result.message_id] = result
        users.setdefault(user.author_id, user)
    stats.unique_messages = len(messages)
    stats.unique_users = len(users)
    if stats.total_records and stats.rejected_malformed / stats.total_records > options.max_malformed_fraction:
        raise CorruptArchiveError(
            f"corrupt archive: {stats.rejected_malformed} of {stats.total_records} lines malformed")
    return list(messages.values()), list(users.values()), stats


def iter_archive_lines(paths: Sequence[str | Path]) -> Iterator[str]:
    """Lines from each archive in order; ``.gz`` files are decompressed."""
    for p in paths:
        p = Path(p)
        opener = gzip.open if p.suffix == ".gz" else open
        with opener(p, "rt", encoding="utf-8") as fh:
            yield from fh


def load_schema(path: str | Path | None) -> dict[str, str] | None:
    if path is None:
        return None
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".toml":
        import tomli
        data = tomli.loads(text)
        data = data.get("schema", data)
    else:
        data = json.loads(text)
    unknown = set(data) - set(CANONICAL_FIELDS)
    if unknown:
        raise ValueError(f"schema maps unknown fields: {sorted(unknown)}")
    return {str(k): str(v) for k, v in data.items()}


# ---------------------------------------------------------------------------
# normalized jsonl round trip used between pipeline stages

def write_messages(path: Path, messages: Iterable[MessageRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in messages:
            fh.write(json.dumps(m.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def write_users(path: Path, users: Iterable[UserProfile]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u in users:
            fh.write(json.dumps(u.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def read_messages(path: Path) -> list[MessageRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            o = json.loads(line)
            out.append(MessageRecord(o["id"], o["user_id"], parse_timestamp(o["created_at"]),
                                     o["text"], o["lang"], o["keyword_set"]))
    return out


def read_users(path: Path) -> list[UserProfile]:
    with open(path, encoding="utf-8") as fh:
        return [user_from_raw(json.loads(line)) for line in fh]
