"""Lexicon-based sentiment scoring and daily alignment.

A deliberately small VADER-flavoured scorer: token valences, a 3-token
negation window, adjacent intensity boosters, and the s/sqrt(s^2+15)
compound squash. Punctuation/caps/emoji rules are out of scope; the
pipeline only consumes the compound score.
"""

from __future__ import annotations

import bisect
import datetime as dt
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources

from .errors import ContractError, RowError
from .features import ScalerParams, fit_minmax, transform

NEGATION_WINDOW = 3
SQUASH_ALPHA = 15.0

NEGATORS = frozenset({
    "not", "no", "never", "none", "neither", "nor", "without",
    "isnt", "isn't", "wasnt", "wasn't", "arent", "aren't",
    "dont", "don't", "doesnt", "doesn't", "didnt", "didn't",
    "cant", "can't", "cannot", "wont", "won't", "couldnt", "couldn't",
    "shouldnt", "shouldn't", "hardly", "barely", "lacks", "lacking",
})

BOOSTERS = {
    "very": 0.293, "extremely": 0.293, "hugely": 0.293, "incredibly": 0.293,
    "really": 0.267, "remarkably": 0.267, "significantly": 0.267,
    "sharply": 0.293, "strongly": 0.267, "substantially": 0.267,
    "slightly": -0.293, "somewhat": -0.267, "marginally": -0.293,
    "mildly": -0.267, "moderately": -0.178,
}

_TOKEN_RE = re.compile(r"[a-z']+")


@dataclass(frozen=True)
class NewsItem:
    date: dt.date
    text: str
    source: str | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("news text must be nonempty")


@dataclass
class SentimentLexicon:
    valences: dict[str, float]
    negators: frozenset[str] = NEGATORS
    boosters: dict[str, float] = field(default_factory=lambda: dict(BOOSTERS))

    def __post_init__(self):
        for tok, v in self.valences.items():
            if not math.isfinite(v):
                raise ValueError(f"non-finite valence for {tok!r}")


@dataclass
class DailySentiment:
    dates: list[dt.date]
    scores: list[float]
    coverage: list[int]


def load_default_lexicon() -> SentimentLexicon:
    text = resources.files("stockcast.data").joinpath("finance_lexicon.tsv").read_text()
    return parse_lexicon(text)


def parse_lexicon(text: str) -> SentimentLexicon:
    """Parse `token<TAB>valence` lines; duplicates are an error."""
    valences: dict[str, float] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise RowError(line_no, "expected token<TAB>valence")
        token = parts[0].strip().lower()
        if token in valences:
            raise RowError(line_no, f"duplicate token {token!r}")
        try:
            valences[token] = float(parts[1])
        except ValueError:
            raise RowError(line_no, f"bad valence {parts[1]!r}") from None
    return SentimentLexicon(valences=valences)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def score_text(text: str, lexicon: SentimentLexicon) -> float:
    """Compound score in (-1, 1). Zero when nothing in the text hits the lexicon."""
    tokens = tokenize(text)
    total = 0.0
    for i, token in enumerate(tokens):
        valence = lexicon.valences.get(token)
        if valence is None:
            continue
        if i > 0:
            boost = lexicon.boosters.get(tokens[i - 1])
            if boost is not None:
                valence += boost * math.copysign(1.0, valence)
        window = tokens[max(0, i - NEGATION_WINDOW):i]
        if any(t in lexicon.negators for t in window):
            valence = -valence
        total += valence
    return squash(total)


def squash(s: float) -> float:
    """Map an unbounded valence sum into (-1, 1); odd in s."""
    return s / math.sqrt(s * s + SQUASH_ALPHA)


def aggregate_daily(items: list[tuple[NewsItem, float]],
                    calendar: list[dt.date]) -> DailySentiment:
    """Mean article score per trading day.

    News dated on a non-trading day attaches to the next trading day; news
    after the last trading day is discarded. Days without news carry the
    previous day's score forward (0 before any news arrives).
    """
    if not calendar:
        raise ContractError("calendar must be nonempty")
    if any(b >= a for b, a in zip(calendar, calendar[1:])):
        raise ContractError("calendar must be strictly ascending")

    buckets: dict[int, list[float]] = {}
    for item, score in items:
        idx = bisect.bisect_left(calendar, item.date)
        if idx == len(calendar):
            continue
        buckets.setdefault(idx, []).append(score)

    scores, coverage = [], []
    carry = 0.0
    for i in range(len(calendar)):
        day = buckets.get(i)
        if day:
            carry = sum(day) / len(day)
            coverage.append(len(day))
        else:
            coverage.append(0)
        scores.append(carry)
    return DailySentiment(dates=list(calendar), scores=scores, coverage=coverage)


def normalize_sentiment(daily: DailySentiment) -> tuple[list[float], ScalerParams]:
    """Min-max rescale of the daily compound series, returning the fit params."""
    params = fit_minmax(daily.scores)
    return list(transform(daily.scores, params)), params


def load_news_jsonl(text: str) -> list[NewsItem]:
    """One JSON object per line: {"date": "YYYY-MM-DD", "text": ..., "source"?: ...}."""
    items = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            items.append(NewsItem(date=dt.date.fromisoformat(obj["date"]),
                                  text=obj["text"], source=obj.get("source")))
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise RowError(line_no, f"bad news record: {exc}") from None
    return items
