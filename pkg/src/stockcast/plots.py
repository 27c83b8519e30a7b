"""Matplotlib figure rendering for the CLI report paths.

Every figure lands next to its delimited data file; the CSV/JSON artifacts
remain the authoritative outputs and none of the analytics depend on these.
"""

from __future__ import annotations

import datetime as dt
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .evaluation import CorrelationMatrix, RiskReturnPoint, SensitivityCell  # noqa: E402
from .features import FeatureFrame  # noqa: E402
from .training import TrainHistory  # noqa: E402


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def price_with_mas(frame: FeatureFrame, ticker: str, path: Path,
                   price_column: str = "close") -> None:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.plot(frame.dates, frame.columns[price_column], label=price_column, lw=1.2)
    for name, col in frame.columns.items():
        if name.startswith("ma"):
            ax.plot(frame.dates, col, label=name.upper(), lw=0.9, alpha=0.8)
    ax.set_title(f"{ticker} closing price and moving averages")
    ax.set_ylabel("price")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def loss_curves(history: TrainHistory, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    epochs = range(1, len(history.train_loss) + 1)
    ax.plot(epochs, history.train_loss, label="train")
    ax.plot(epochs, history.val_loss, label="validation")
    ax.axvline(history.best_epoch, color="gray", ls="--", lw=0.8,
               label=f"best epoch {history.best_epoch}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("MSE (normalized units)")
    ax.set_yscale("log")
    ax.legend()
    _save(fig, path)


def actual_vs_predicted(dates: list[dt.date], actual: np.ndarray,
                        forecast: np.ndarray, ticker: str, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.plot(dates, actual, label="actual", lw=1.2)
    ax.plot(dates, forecast, label="predicted", lw=1.2, alpha=0.85)
    ax.set_title(f"{ticker}: actual vs predicted closing price")
    ax.set_ylabel("price")
    ax.legend()
    _save(fig, path)


def correlation_heatmap(matrix: CorrelationMatrix, title: str, path: Path) -> None:
    k = len(matrix.tickers)
    fig, ax = plt.subplots(figsize=(1.2 * k + 2, 1.0 * k + 2))
    im = ax.imshow(matrix.values, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(k), matrix.tickers, rotation=45, ha="right")
    ax.set_yticks(range(k), matrix.tickers)
    for i in range(k):
        for j in range(k):
            v = matrix.values[i, j]
            ax.text(j, i, "n/a" if math.isnan(v) else f"{v:.2f}",
                    ha="center", va="center", fontsize=8)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, path)


def risk_return_scatter(points: list[RiskReturnPoint], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 5))
    for p in points:
        ax.scatter(p.sigma, p.mu, s=40)
        ax.annotate(p.ticker, (p.sigma, p.mu), textcoords="offset points",
                    xytext=(6, 4), fontsize=9)
    ax.set_xlabel("risk: std of daily returns (%)")
    ax.set_ylabel("expected daily return (%)")
    ax.set_title("Risk vs return")
    ax.grid(alpha=0.3)
    _save(fig, path)


def return_histograms(returns_by_ticker: dict[str, np.ndarray], path: Path,
                      bins: int = 20) -> None:
    k = len(returns_by_ticker)
    fig, axes = plt.subplots(1, k, figsize=(4 * k, 3.5), squeeze=False)
    for ax, (ticker, r) in zip(axes[0], returns_by_ticker.items()):
        ax.hist(r, bins=bins, alpha=0.8)
        ax.set_title(ticker, fontsize=10)
        ax.set_xlabel("daily return (%)")
    _save(fig, path)


def window_sensitivity_plot(cells: list[SensitivityCell], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    for flag, label in ((True, "with sentiment"), (False, "without sentiment")):
        pts = sorted((c.window, c.mape) for c in cells if c.with_sentiment is flag
                     and not math.isnan(c.mape))
        if pts:
            ax.plot([w for w, _ in pts], [m for _, m in pts], marker="o", label=label)
    ax.set_xlabel("window size (days)")
    ax.set_ylabel("test MAPE (%)")
    ax.set_title("Effect of window size on MAPE")
    ax.legend()
    ax.grid(alpha=0.3)
    _save(fig, path)
