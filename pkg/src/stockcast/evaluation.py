"""Error metrics, denormalized forecasts, EDA statistics, sensitivity harness."""

from __future__ import annotations

import datetime as dt
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InsufficientDataError
from .features import (FeatureFrame, ScalerParams, WindowedDataset, fit_minmax,
                       inverse_transform, make_windows, transform)
from .neural import LstmNetwork, NetworkConfig, forward, init_params
from .training import TrainConfig, split_train_test, train


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    rmse: float
    mape: float            # percent
    n: int

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "mae": self.mae, "mse": self.mse,
                           "rmse": self.rmse, "mape_percent": self.mape},
                          sort_keys=True, indent=1) + "\n"

    def to_table(self) -> str:
        rows = [("MAE", self.mae), ("MSE", self.mse),
                ("RMSE", self.rmse), ("MAPE (%)", self.mape)]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k:<{width}}  {v:.6f}" for k, v in rows]
        lines.append(f"{'n':<{width}}  {self.n}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RiskReturnPoint:
    ticker: str
    mu: float              # mean daily return, percent
    sigma: float           # sample std of daily returns, percent


@dataclass
class CorrelationMatrix:
    tickers: list[str]
    values: np.ndarray     # symmetric, NaN where undefined (constant series)

    def to_csv(self) -> str:
        lines = ["," + ",".join(self.tickers)]
        for i, t in enumerate(self.tickers):
            cells = ["" if math.isnan(v) else repr(float(v)) for v in self.values[i]]
            lines.append(",".join([t] + cells))
        return "\n".join(lines) + "\n"


def compute_metrics(actual, forecast) -> MetricsReport:
    """MAE, MSE, RMSE and percent MAPE over aligned series."""
    a = np.asarray(actual, dtype=np.float64)
    f = np.asarray(forecast, dtype=np.float64)
    if a.shape != f.shape or a.ndim != 1 or a.size == 0:
        raise ContractError("actual/forecast must be equal-length nonempty vectors")
    if np.any(a == 0.0):
        raise ValueError("MAPE undefined: actual contains zero")
    err = a - f
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err ** 2))
    return MetricsReport(mae=mae, mse=mse, rmse=math.sqrt(mse),
                         mape=float(100.0 * np.mean(np.abs(err / a))), n=a.size)


def predict_series(network: LstmNetwork, scaler: ScalerParams,
                   dataset: WindowedDataset) -> tuple[list[dt.date], np.ndarray, np.ndarray]:
    """Run inference over a dataset and return date-aligned actual/forecast
    series in price units.

    `network` may also be any callable window -> normalized prediction, which
    keeps the round-trip testable with stub predictors.
    """
    if np.any(dataset.X < -0.5) or np.any(dataset.X > 1.5):
        warnings.warn("normalized inputs outside [-0.5, 1.5]; scaler may not "
                      "match this dataset", stacklevel=2)
    if callable(network):
        predict = network
    else:
        def predict(x):
            return forward(network, x, mode="infer")[0]
    preds = np.array([predict(x) for x in dataset.X])
    actual = inverse_transform(dataset.y, scaler)
    forecast = inverse_transform(preds, scaler)
    return list(dataset.target_dates), actual, forecast


def prediction_csv(dates: list[dt.date], actual: np.ndarray, forecast: np.ndarray) -> str:
    lines = ["date,actual,forecast"]
    for d, a, f in zip(dates, actual, forecast):
        lines.append(f"{d.isoformat()},{float(a)!r},{float(f)!r}")
    return "\n".join(lines) + "\n"


def pearson_matrix(series_by_ticker: dict[str, np.ndarray]) -> CorrelationMatrix:
    """Pairwise Pearson coefficients (sample covariance). Entries involving a
    constant series are undefined and reported as NaN."""
    tickers = list(series_by_ticker)
    arrays = [np.asarray(series_by_ticker[t], dtype=np.float64) for t in tickers]
    n = arrays[0].size
    if n < 2:
        raise InsufficientDataError("need at least 2 observations")
    if any(a.size != n for a in arrays):
        raise ContractError("series lengths differ")

    k = len(tickers)
    out = np.full((k, k), np.nan)
    stds = [float(np.std(a, ddof=1)) for a in arrays]
    for i in range(k):
        for j in range(i, k):
            if stds[i] == 0.0 or stds[j] == 0.0:
                continue
            if i == j:
                out[i, i] = 1.0
                continue
            xi, xj = arrays[i], arrays[j]
            cov = float(np.sum((xi - xi.mean()) * (xj - xj.mean())) / (n - 1))
            # clamp float rounding so entries stay inside [-1, 1]
            out[i, j] = out[j, i] = min(1.0, max(-1.0, cov / (stds[i] * stds[j])))
    return CorrelationMatrix(tickers=tickers, values=out)


def risk_return(returns_by_ticker: dict[str, np.ndarray]) -> list[RiskReturnPoint]:
    """Mean and sample standard deviation (n-1) of each ticker's daily returns."""
    points = []
    for ticker, r in returns_by_ticker.items():
        r = np.asarray(r, dtype=np.float64)
        if r.size < 2:
            raise InsufficientDataError(f"{ticker}: need at least 2 returns")
        points.append(RiskReturnPoint(ticker=ticker, mu=float(np.mean(r)),
                                      sigma=float(np.std(r, ddof=1))))
    return points


# -- pipeline glue ------------------------------------------------------------

def fit_frame_scalers(frame: FeatureFrame, columns: list[str],
                      train_ratio: float = 0.8,
                      paper_faithful: bool = False) -> dict[str, ScalerParams]:
    """Per-column min-max params, fit on the leading train share of rows
    (or the whole frame when paper_faithful)."""
    n_fit = len(frame) if paper_faithful else max(2, int(len(frame) * train_ratio))
    scalers = {}
    for name in columns:
        col = frame.columns[name]
        finite = col[:n_fit][np.isfinite(col[:n_fit])]
        scalers[name] = fit_minmax(finite)
    return scalers


def prepare_datasets(frame: FeatureFrame, window_size: int,
                     feature_columns: list[str], target_column: str = "close",
                     train_ratio: float = 0.8, paper_faithful: bool = False,
                     ) -> tuple[WindowedDataset, WindowedDataset, dict[str, ScalerParams]]:
    """Normalize, window, and split a raw feature frame.

    Scalers fit on the leading `train_ratio` share of rows by default so test
    data never leaks into normalization; `paper_faithful` fits on everything.
    """
    subset = FeatureFrame(dates=frame.dates,
                          columns={n: frame.columns[n] for n in feature_columns})
    frame = subset.drop_undefined_rows()
    scalers = fit_frame_scalers(frame, feature_columns, train_ratio=train_ratio,
                                paper_faithful=paper_faithful)
    norm = FeatureFrame(dates=frame.dates, columns={})
    for name in feature_columns:
        norm.add_column(name, transform(frame.columns[name], scalers[name]))
    dataset = make_windows(norm, window_size=window_size, target_column=target_column,
                           feature_columns=feature_columns)
    train_ds, test_ds = split_train_test(dataset, ratio=train_ratio)
    return train_ds, test_ds, scalers


@dataclass(frozen=True)
class SensitivityCell:
    window: int
    with_sentiment: bool
    mape: float            # NaN when the cell had insufficient data


def sensitivity_csv(cells: list[SensitivityCell]) -> str:
    lines = ["window,with_sentiment,mape"]
    for c in cells:
        mape = "" if math.isnan(c.mape) else repr(c.mape)
        lines.append(f"{c.window},{str(c.with_sentiment).lower()},{mape}")
    return "\n".join(lines) + "\n"


def window_sensitivity(frame: FeatureFrame, windows: list[int],
                       config: TrainConfig, layer_sizes: tuple[int, ...] = (64, 32),
                       dropout_rate: float = 0.2, ablate_sentiment: bool = True,
                       target_column: str = "close", train_ratio: float = 0.8,
                       paper_faithful: bool = False) -> list[SensitivityCell]:
    """Train one model per (window, sentiment) cell with a shared base seed and
    report the test MAPE of each. Cells without enough data come back NaN."""
    has_sentiment = "sentiment" in frame.columns
    variants = [False, True] if (ablate_sentiment and has_sentiment) else [has_sentiment]
    cells = []
    for window in windows:
        for with_sentiment in variants:
            features = [target_column] + (["sentiment"] if with_sentiment else [])
            try:
                train_ds, test_ds, scalers = prepare_datasets(
                    frame, window, features, target_column=target_column,
                    train_ratio=train_ratio, paper_faithful=paper_faithful)
                net_cfg = NetworkConfig(window_size=window, n_features=len(features),
                                        layer_sizes=layer_sizes,
                                        dropout_rate=dropout_rate, seed=config.seed)
                network = init_params(net_cfg)
                network, _, _ = train(network, train_ds, config)
                _, actual, forecast = predict_series(network, scalers[target_column],
                                                     test_ds)
                mape = compute_metrics(actual, forecast).mape
            except InsufficientDataError:
                mape = math.nan
            cells.append(SensitivityCell(window=window, with_sentiment=with_sentiment,
                                         mape=mape))
    return cells
