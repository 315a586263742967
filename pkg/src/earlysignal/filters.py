"""Noise filters separating organic symptom mentions from news-driven posts.

Rules run in a fixed order and each dropped message is attributed to the
first rule it fails:

1. ``url``: the text carries a direct link (optionally every post of an
   author who ever posted one is removed too);
2. ``followers``: the author has ``follower_cap`` followers or more, or is
   missing from the user table;
3. ``keyword``: the text mentions an excluded keyword. Only applied to
   messages dated inside ``applies_to_window`` and outside the exempt
   keyword sets.
"""
from __future__ import annotations

import datetime as dt
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .ingest import MessageRecord, UserProfile

NEWS_CUTOFF = dt.date(2020, 1, 21)
BASE_EXCLUDED = ("Coronavirus", "China", "COVID")

# Reconstructed translations; editable through [filters.exclude.<lang>].
# Italian avoids bare "Cina", which is a substring of "medicina" and "vicina".
DEFAULT_EXCLUDED_BY_LANGUAGE = {
    "en": (),
    "de": (),
    "fr": ("Chine",),
    "it": ("in Cina", "la Cina", "dalla Cina", "della Cina", "cinese"),
    "es": (),
    "pl": ("koronawirus", "Chiny", "Chinach", "chińsk"),
    "nl": (),
}

_URL_RE = re.compile(
    r"https?://\S+"
    r"|www\.[^\s./]+(?:\.[^\s./]+)+",
    re.IGNORECASE,
)


def has_direct_url(text: str) -> bool:
    return _URL_RE.search(text) is not None


def keyword_match(text: str, keywords: Sequence[str], case_fold: bool = True) -> bool:
    if not keywords:
        raise ValueError("keyword list is empty")
    if case_fold:
        text = text.casefold()
        return any(k.casefold() in text for k in keywords)
    return any(k in text for k in keywords)


@dataclass(frozen=True)
class FilterPolicy:
    url_filter_on: bool = True
    follower_cap: int = 2000
    excluded_keywords: tuple = BASE_EXCLUDED
    excluded_by_language: Mapping[str, tuple] = field(
        default_factory=lambda: dict(DEFAULT_EXCLUDED_BY_LANGUAGE))
    case_fold: bool = True
    # inclusive (first, last); None on either side is open
    applies_to_window: tuple | None = (None, NEWS_CUTOFF)
    keyword_filter_on: bool = True
    exempt_keyword_sets: tuple = ("coronavirus",)
    drop_url_authors: bool = True

    def __post_init__(self):
        if self.follower_cap <= 0:
            raise ValueError("follower_cap must be positive")
        if self.keyword_filter_on and not self.excluded_keywords:
            raise ValueError("excluded_keywords must be non-empty when exclusion is enabled")

    def keywords_for(self, language: str) -> tuple:
        return tuple(self.excluded_keywords) + tuple(self.excluded_by_language.get(language, ()))

    def keyword_rule_applies(self, msg: MessageRecord) -> bool:
        if not self.keyword_filter_on or msg.matched_keyword_set in self.exempt_keyword_sets:
            return False
        if self.applies_to_window is None:
            return True
        first, last = self.applies_to_window
        day = msg.day
        return (first is None or day >= first) and (last is None or day <= last)


@dataclass
class FilterStats:
    dropped_url: int = 0
    dropped_followers: int = 0
    dropped_keyword: int = 0
    survivors_messages: int = 0
    survivors_users: int = 0

    @property
    def input_messages(self) -> int:
        return self.dropped_url + self.dropped_followers + self.dropped_keyword + self.survivors_messages

    def __add__(self, other: "FilterStats") -> "FilterStats":
        # survivors_users is a distinct count and only adds up over disjoint author sets
        return FilterStats(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self):
        return (self.dropped_url, self.dropped_followers, self.dropped_keyword,
                self.survivors_messages, self.survivors_users)

    def to_json(self) -> dict:
        return {"dropped_url": self.dropped_url, "dropped_followers": self.dropped_followers,
                "dropped_keyword": self.dropped_keyword, "survivors_messages": self.survivors_messages,
                "survivors_users": self.survivors_users, "input_messages": self.input_messages}


RULE_ORDER = ("url", "followers", "keyword")


def apply_filters(messages: Iterable[MessageRecord], users: Mapping[str, UserProfile],
                  policy: FilterPolicy = FilterPolicy(),
                  rule_order: Sequence[str] = RULE_ORDER) -> tuple[list[MessageRecord], FilterStats]:
    messages = list(messages)
    url_authors = set()
    if policy.url_filter_on and policy.drop_url_authors:
        url_authors = {m.author_id for m in messages if has_direct_url(m.text)}

    def fails(rule: str, m: MessageRecord) -> bool:
        if rule == "url":
            return policy.url_filter_on and (m.author_id in url_authors or has_direct_url(m.text))
        if rule == "followers":
            user = users.get(m.author_id)
            return user is None or user.followers >= policy.follower_cap
        if rule == "keyword":
            return (policy.keyword_rule_applies(m)
                    and keyword_match(m.text, policy.keywords_for(m.language), policy.case_fold))
        raise ValueError(f"unknown rule {rule!r}")

    stats = FilterStats()
    survivors = []
    for m in messages:
        for rule in rule_order:
            if fails(rule, m):
                setattr(stats, f"dropped_{rule}", getattr(stats, f"dropped_{rule}") + 1)
                break
        else:
            survivors.append(m)
    stats.survivors_messages = len(survivors)
    stats.survivors_users = len({m.author_id for m in survivors})
    return survivors, stats


def policy_from_config(section: Mapping) -> FilterPolicy:
    """Build a policy from the ``[filters]`` table of a pipeline config."""
    exclude = dict(section.get("exclude", {}))
    base = tuple(exclude.pop("all", BASE_EXCLUDED))
    by_lang = dict(DEFAULT_EXCLUDED_BY_LANGUAGE)
    for lang, words in exclude.items():
        if isinstance(words, Mapping):
            words = words.get("keywords", ())
        by_lang[lang] = tuple(words)
    window = section.get("keyword_window", None)
    if window is None:
        end = section.get("keyword_window_end", NEWS_CUTOFF.isoformat())
        start = section.get("keyword_window_start")
        window = (_date_or_none(start), _date_or_none(end))
    elif window == "all":
        window = None
    return FilterPolicy(
        url_filter_on=bool(section.get("url_filter", True)),
        follower_cap=int(section.get("follower_cap", 2000)),
        excluded_keywords=base,
        excluded_by_language=by_lang,
        case_fold=bool(section.get("case_fold", True)),
        applies_to_window=window,
        keyword_filter_on=bool(section.get("keyword_filter", True)),
        exempt_keyword_sets=tuple(section.get("exempt_keyword_sets", ("coronavirus",))),
        drop_url_authors=bool(section.get("drop_url_authors", True)),
    )


def _date_or_none(v):
    if v in (None, "", "none"):
        return None
    if isinstance(v, dt.date):
        return v
    return dt.date.fromisoformat(str(v))
