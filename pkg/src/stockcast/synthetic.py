"""Deterministic synthetic fixtures for tests, demos, and the acceptance suite.

Real market data and news feeds cannot ship with the repo, so the end-to-end
paths are exercised on generated series instead: a noiseless sine price track
and a price series causally coupled to a sentiment signal.
"""

from __future__ import annotations

import datetime as dt
import json
import math

import numpy as np

from .features import FeatureFrame
from .market_data import OhlcvBar, OhlcvSeries

_EPOCH = dt.date(2024, 1, 1)


def trading_calendar(n: int, start: dt.date = _EPOCH) -> list[dt.date]:
    """n consecutive weekdays starting at or after `start`."""
    days = []
    d = start
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += dt.timedelta(days=1)
    return days


def sine_frame(n: int = 400, period: float = 40.0, base: float = 100.0,
               amplitude: float = 10.0) -> FeatureFrame:
    """Noiseless sine price track; trivially learnable, used as a smoke fixture."""
    t = np.arange(n, dtype=np.float64)
    close = base + amplitude * np.sin(2.0 * math.pi * t / period)
    return FeatureFrame(dates=trading_calendar(n), columns={"close": close})


def sentiment_coupled_frame(n: int = 300, seed: int = 0,
                            noise: float = 0.02) -> FeatureFrame:
    """Price series whose next normalized close is driven by sentiment:
    norm_{t+1} = 0.5 * norm_t + 0.4 * sentiment_t + noise.

    A model that sees the sentiment column can beat one that does not; the
    ablation acceptance check relies on that asymmetry.
    """
    rng = np.random.default_rng(seed)
    sentiment = rng.uniform(0.0, 1.0, size=n)
    norm = np.empty(n)
    norm[0] = 0.5
    for t in range(n - 1):
        norm[t + 1] = 0.5 * norm[t] + 0.4 * sentiment[t] + rng.normal(0.0, noise)
    close = 100.0 + 50.0 * norm
    return FeatureFrame(dates=trading_calendar(n),
                        columns={"close": close, "sentiment": sentiment})


def sine_ohlcv(n: int = 400, seed: int = 0) -> OhlcvSeries:
    """OHLCV wrapper around the sine track, for exercising the ingest path."""
    frame = sine_frame(n)
    rng = np.random.default_rng(seed)
    bars = []
    for date, close in zip(frame.dates, frame.columns["close"]):
        close = float(close)
        spread = abs(float(rng.normal(0.0, 0.5))) + 0.1
        open_ = close + float(rng.normal(0.0, 0.3))
        high = max(open_, close) + spread
        low = min(open_, close) - spread
        volume = float(rng.integers(1_000_000, 5_000_000))
        bars.append(OhlcvBar(date=date, open=open_, high=high, low=low,
                             close=close, adj_close=close, volume=volume))
    return OhlcvSeries(ticker="SINE", bars=tuple(bars))


_POSITIVE_HEADLINES = [
    "Shares rally as quarterly profit beats expectations",
    "Stock surges on strong growth and upbeat guidance",
    "Analysts upgrade the stock after record earnings",
    "Robust momentum drives gains across the sector",
]
_NEGATIVE_HEADLINES = [
    "Shares plunge after earnings miss and weak outlook",
    "Stock tumbles on fears of recession and rising debt",
    "Analysts downgrade the stock amid lawsuit uncertainty",
    "Losses deepen as panic selloff hits the sector",
]


def synthetic_news_jsonl(calendar: list[dt.date], seed: int = 0,
                         coverage: float = 0.6) -> str:
    """JSON-lines news feed with a mix of positive and negative headlines."""
    rng = np.random.default_rng(seed)
    lines = []
    for date in calendar:
        if rng.random() > coverage:
            continue
        pool = _POSITIVE_HEADLINES if rng.random() < 0.5 else _NEGATIVE_HEADLINES
        text = pool[int(rng.integers(len(pool)))]
        lines.append(json.dumps({"date": date.isoformat(), "text": text,
                                 "source": "synthetic"}, sort_keys=True))
    return "\n".join(lines) + "\n"
