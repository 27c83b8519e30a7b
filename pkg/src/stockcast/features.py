"""Feature engineering: returns, moving averages, min-max scaling, windowing.

Everything downstream of cleaning and upstream of the network lives here.
Columns are plain float64 arrays aligned on a shared date axis; moving-average
warm-up rows are NaN and get trimmed before windowing.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, InsufficientDataError

DEFAULT_WINDOW = 60
DEFAULT_MA_WINDOWS = (10, 20, 50)


@dataclass(frozen=True)
class ScalerParams:
    """Min-max extremes of one feature. Degenerate (x_min == x_max) params map
    every value to 0 on transform."""

    x_min: float
    x_max: float

    @property
    def span(self) -> float:
        return self.x_max - self.x_min


def daily_returns(prices) -> np.ndarray:
    """Percent day-over-day returns: (P_t / P_{t-1} - 1) * 100."""
    p = np.asarray(prices, dtype=np.float64)
    if p.size < 2:
        raise InsufficientDataError("need at least 2 prices for returns")
    if np.any(p <= 0):
        raise ValueError("prices must be positive")
    return (p[1:] / p[:-1] - 1.0) * 100.0


def moving_average(prices, k: int) -> np.ndarray:
    """Trailing k-day arithmetic mean; the first k-1 entries are NaN."""
    p = np.asarray(prices, dtype=np.float64)
    if k < 1:
        raise ValueError("window length must be >= 1")
    if p.size < k:
        raise InsufficientDataError(f"series of length {p.size} shorter than window {k}")
    out = np.full(p.size, np.nan)
    csum = np.concatenate(([0.0], np.cumsum(p)))
    out[k - 1:] = (csum[k:] - csum[:-k]) / k
    return out


def fit_minmax(values) -> ScalerParams:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise InsufficientDataError("cannot fit scaler on empty series")
    return ScalerParams(x_min=float(np.min(v)), x_max=float(np.max(v)))


def transform(values, params: ScalerParams) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if params.span == 0.0:
        return np.zeros_like(v)
    return (v - params.x_min) / params.span


def inverse_transform(values, params: ScalerParams) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return v * params.span + params.x_min


@dataclass
class FeatureFrame:
    """Named float columns aligned on ascending trading dates."""

    dates: list[dt.date]
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.dates)
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=np.float64)
            if col.shape != (n,):
                raise ContractError(f"column {name!r} has length {col.shape}, expected {n}")
            self.columns[name] = col
        if any(b >= a for b, a in zip(self.dates, self.dates[1:])):
            raise ContractError("dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.dates)

    def add_column(self, name: str, values) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (len(self.dates),):
            raise ContractError(f"column {name!r} misaligned with date axis")
        self.columns[name] = values

    def drop_undefined_rows(self) -> "FeatureFrame":
        """Drop rows where any column is NaN (moving-average warm-up)."""
        mask = np.ones(len(self.dates), dtype=bool)
        for col in self.columns.values():
            mask &= np.isfinite(col)
        dates = [d for d, keep in zip(self.dates, mask) if keep]
        cols = {name: col[mask] for name, col in self.columns.items()}
        return FeatureFrame(dates=dates, columns=cols)

    def to_csv(self) -> str:
        names = list(self.columns)
        lines = [",".join(["Date"] + names)]
        for i, d in enumerate(self.dates):
            row = [d.isoformat()] + [repr(float(self.columns[n][i])) for n in names]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "FeatureFrame":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = lines[0].split(",")
        if header[0] != "Date":
            raise ContractError("frame CSV must start with a Date column")
        names = header[1:]
        dates, rows = [], []
        for ln in lines[1:]:
            fields = ln.split(",")
            dates.append(dt.date.fromisoformat(fields[0]))
            rows.append([float(f) for f in fields[1:]])
        arr = np.asarray(rows, dtype=np.float64).reshape(len(dates), len(names))
        return cls(dates=dates, columns={n: arr[:, i] for i, n in enumerate(names)})


@dataclass
class WindowedDataset:
    """Sliding-window samples. X[i] covers frame rows [i, i+window); y[i] is the
    target column at row i+window, with its date in target_dates[i]."""

    X: np.ndarray              # (n_samples, window_size, n_features)
    y: np.ndarray              # (n_samples,)
    window_size: int
    feature_names: list[str]
    target_dates: list[dt.date]

    def __len__(self) -> int:
        return self.X.shape[0]


def make_windows(frame: FeatureFrame, window_size: int = DEFAULT_WINDOW,
                 target_column: str = "close",
                 feature_columns: list[str] | None = None) -> WindowedDataset:
    """Cut overlapping windows; each predicts the target one step past its end."""
    if target_column not in frame.columns:
        raise ContractError(f"frame has no column {target_column!r}")
    names = feature_columns if feature_columns is not None else list(frame.columns)
    n = len(frame)
    if n <= window_size:
        raise InsufficientDataError(
            f"frame length {n} must exceed window size {window_size}")
    mat = np.column_stack([frame.columns[name] for name in names])
    if not np.all(np.isfinite(mat)):
        raise ContractError("frame has undefined rows; call drop_undefined_rows first")

    n_samples = n - window_size
    X = np.stack([mat[i:i + window_size] for i in range(n_samples)])
    target = frame.columns[target_column]
    y = np.array([target[i + window_size] for i in range(n_samples)])
    target_dates = [frame.dates[i + window_size] for i in range(n_samples)]
    return WindowedDataset(X=X, y=y, window_size=window_size,
                           feature_names=list(names), target_dates=target_dates)
