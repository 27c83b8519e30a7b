"""OHLCV ingestion and cleaning.

Parses per-ticker daily bar history from CSV, flags incomplete rows,
and offers the two cleaning passes used before feature engineering:
dropping incomplete bars and z-score outlier treatment on the close.
"""

from __future__ import annotations

import datetime as dt
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .errors import EmptyInputError, EmptySeriesError, RowError, SchemaError

CSV_HEADER = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"]


@dataclass(frozen=True)
class OhlcvBar:
    """One trading day. Numeric fields are None when the source row was blank
    or non-numeric; such bars are carried as "missing" until drop_missing."""

    date: dt.date
    open: Optional[float]
    high: Optional[float]
    low: Optional[float]
    close: Optional[float]
    adj_close: Optional[float]
    volume: Optional[float]

    @property
    def is_complete(self) -> bool:
        return None not in (self.open, self.high, self.low,
                            self.close, self.adj_close, self.volume)

    def price(self, column: str) -> float:
        """Return the modeling price, `close` or `adj_close`."""
        value = getattr(self, column)
        if value is None:
            raise ValueError(f"bar {self.date} has no {column}")
        return value


@dataclass(frozen=True)
class OhlcvSeries:
    ticker: str
    bars: tuple[OhlcvBar, ...]

    def __len__(self) -> int:
        return len(self.bars)

    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]

    def closes(self, column: str = "close") -> list[float]:
        return [b.price(column) for b in self.bars]


def _parse_field(raw: str) -> Optional[float]:
    raw = raw.strip()
    if not raw:
        return None
    try:
        value = float(raw)
    except ValueError:
        return None
    if not math.isfinite(value):
        return None
    return value


def _validate_bar(bar: OhlcvBar, line: int) -> None:
    if not bar.is_complete:
        return
    prices = (bar.open, bar.high, bar.low, bar.close, bar.adj_close)
    if any(p <= 0 for p in prices):
        raise RowError(line, "non-positive price")
    if bar.volume < 0:
        raise RowError(line, "negative volume")
    if bar.low > min(bar.open, bar.close) or bar.high < max(bar.open, bar.close):
        raise RowError(line, "high/low outside open/close range")


def parse_ohlcv_csv(text: str | io.TextIOBase, ticker: str) -> OhlcvSeries:
    """Parse `Date,Open,High,Low,Close,Adj Close,Volume` CSV into a series.

    Rows with blank or non-numeric fields are kept and flagged missing so the
    caller decides how to clean them. Bars come back sorted by date.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    lines = [ln.rstrip("\r\n") for ln in text]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise EmptyInputError("no content")
    header = [h.strip() for h in lines[0].split(",")]
    if header != CSV_HEADER:
        raise SchemaError(f"expected header {','.join(CSV_HEADER)!r}, got {lines[0]!r}")
    if len(lines) == 1:
        raise EmptyInputError("header only, no data rows")

    bars = []
    seen_dates = set()
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != len(CSV_HEADER):
            raise RowError(line_no, f"expected {len(CSV_HEADER)} fields, got {len(fields)}")
        try:
            date = dt.date.fromisoformat(fields[0].strip())
        except ValueError:
            raise RowError(line_no, f"unparseable date {fields[0]!r}") from None
        if date in seen_dates:
            raise RowError(line_no, f"duplicate date {date}")
        seen_dates.add(date)
        o, h, l, c, a, v = (_parse_field(f) for f in fields[1:])
        bar = OhlcvBar(date=date, open=o, high=h, low=l, close=c, adj_close=a, volume=v)
        _validate_bar(bar, line_no)
        bars.append(bar)

    bars.sort(key=lambda b: b.date)
    return OhlcvSeries(ticker=ticker, bars=tuple(bars))


def serialize_ohlcv_csv(series: OhlcvSeries) -> str:
    """Inverse of parse_ohlcv_csv; round-trips bit-exactly for well-formed input."""
    out = [",".join(CSV_HEADER)]
    for b in series.bars:
        fields = [b.date.isoformat()]
        for v in (b.open, b.high, b.low, b.close, b.adj_close, b.volume):
            fields.append("" if v is None else repr(float(v)))
        out.append(",".join(fields))
    return "\n".join(out) + "\n"


def drop_missing(series: OhlcvSeries) -> OhlcvSeries:
    """Remove bars with any absent field, preserving order."""
    kept = tuple(b for b in series.bars if b.is_complete)
    if not kept:
        raise EmptySeriesError(f"{series.ticker}: every bar has missing fields")
    return OhlcvSeries(ticker=series.ticker, bars=kept)


def treat_outliers(series: OhlcvSeries, threshold: float = 3.0,
                   mode: str = "cap") -> OhlcvSeries:
    """Treat close-price outliers beyond `threshold` standard deviations.

    z-scores use the mean/std of the original closes, computed once.
    `remove` drops the whole bar; `cap` clamps close to mean +/- threshold*std
    (length preserved). Other columns follow the bar untouched.
    """
    if mode not in ("remove", "cap"):
        raise ValueError(f"mode must be 'remove' or 'cap', got {mode!r}")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if len(series) < 2:
        raise EmptySeriesError("need at least 2 bars for outlier statistics")

    closes = series.closes()
    n = len(closes)
    mean = sum(closes) / n
    std = math.sqrt(sum((c - mean) ** 2 for c in closes) / n)
    if std == 0.0:
        return series

    lo, hi = mean - threshold * std, mean + threshold * std
    bars = []
    for bar, close in zip(series.bars, closes):
        if lo <= close <= hi:
            bars.append(bar)
        elif mode == "cap":
            bars.append(replace(bar, close=min(max(close, lo), hi)))
    return OhlcvSeries(ticker=series.ticker, bars=tuple(bars))
