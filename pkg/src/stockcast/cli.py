"""Command-line entry point.

Subcommands: ingest, analyze, train, evaluate, sensitivity, synthetic.
Configuration lives in a JSON file; a handful of flags override it. Every
command is deterministic given identical inputs and seed, and writes both
delimited data files and the matching rendered figures.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import evaluation, plots, synthetic
from .errors import ContractError, StockcastError
from .features import (DEFAULT_MA_WINDOWS, DEFAULT_WINDOW, FeatureFrame,
                       daily_returns, moving_average)
from .market_data import drop_missing, parse_ohlcv_csv, serialize_ohlcv_csv, treat_outliers
from .neural import NetworkConfig, checkpoint_from_json, checkpoint_to_json, init_params
from .sentiment import (aggregate_daily, load_default_lexicon, load_news_jsonl,
                        parse_lexicon, score_text)
from .training import TrainConfig, train


@dataclass
class RunConfig:
    prices: dict[str, str] = field(default_factory=dict)   # ticker -> CSV path
    news: str | None = None                                # JSONL path
    lexicon: str | None = None                             # TSV path; None = bundled
    out: str = "out"
    checkpoint: str | None = None                          # default: <out>/<ticker>_model.json
    ticker: str | None = None                              # ticker to train/evaluate
    window_size: int = DEFAULT_WINDOW
    layer_sizes: list[int] = field(default_factory=lambda: [64, 32])
    dropout_rate: float = 0.2
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.001
    patience: int = 10
    validation_fraction: float = 0.1
    train_ratio: float = 0.8
    use_sentiment: bool = True
    use_ma_features: bool = False
    ma_windows: list[int] = field(default_factory=lambda: list(DEFAULT_MA_WINDOWS))
    price_column: str = "close"                            # or "adj_close"
    outlier_threshold: float = 3.0
    outlier_mode: str = "cap"
    sigmoid_head: bool = False
    paper_faithful: bool = False
    figures: bool = True
    seed: int = 0

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        if path is None:
            return cls()
        doc = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           learning_rate=self.learning_rate, patience=self.patience,
                           validation_fraction=self.validation_fraction, seed=self.seed)

    def feature_columns(self) -> list[str]:
        cols = ["close"]
        if self.use_sentiment:
            cols.append("sentiment")
        if self.use_ma_features:
            cols += [f"ma{k}" for k in self.ma_windows]
        return cols

    def resolve_ticker(self) -> str:
        if self.ticker:
            return self.ticker
        if len(self.prices) == 1:
            return next(iter(self.prices))
        raise ContractError("config must name a ticker when multiple price files exist")

    def checkpoint_path(self) -> Path:
        if self.checkpoint:
            return Path(self.checkpoint)
        return Path(self.out) / f"{self.resolve_ticker()}_model.json"


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_frame(config: RunConfig, ticker: str) -> FeatureFrame:
    path = Path(config.out) / f"{ticker}_frame.csv"
    if not path.exists():
        raise ContractError(f"no ingested frame at {path}; run `stockcast ingest` first")
    return FeatureFrame.from_csv(path.read_text())


def _load_lexicon(config: RunConfig):
    if config.lexicon:
        return parse_lexicon(Path(config.lexicon).read_text())
    return load_default_lexicon()


def cmd_ingest(config: RunConfig) -> int:
    """Parse, clean, and feature-augment each ticker's price history."""
    if not config.prices:
        raise ContractError("config.prices is empty; nothing to ingest")
    out = _out_dir(config)

    lexicon = _load_lexicon(config) if config.use_sentiment else None
    news_items = None
    if config.use_sentiment:
        if not config.news or not Path(config.news).exists():
            raise ContractError("sentiment enabled but news file missing "
                                f"({config.news!r})")
        news_items = load_news_jsonl(Path(config.news).read_text())

    for ticker, path in config.prices.items():
        series = parse_ohlcv_csv(Path(path).read_text(), ticker)
        series = drop_missing(series)
        series = treat_outliers(series, threshold=config.outlier_threshold,
                                mode=config.outlier_mode)
        prices = np.asarray(series.closes(config.price_column))
        frame = FeatureFrame(dates=series.dates(), columns={"close": prices})
        if config.use_sentiment:
            scored = [(item, score_text(item.text, lexicon)) for item in news_items]
            daily = aggregate_daily(scored, frame.dates)
            frame.add_column("sentiment", daily.scores)
        for k in config.ma_windows:
            frame.add_column(f"ma{k}", moving_average(prices, k))

        (out / f"{ticker}_frame.csv").write_text(frame.to_csv())
        scalers = evaluation.fit_frame_scalers(frame, config.feature_columns(),
                                               train_ratio=config.train_ratio,
                                               paper_faithful=config.paper_faithful)
        scaler_doc = {name: {"x_min": p.x_min, "x_max": p.x_max}
                      for name, p in scalers.items()}
        (out / f"{ticker}_scaler.json").write_text(
            json.dumps(scaler_doc, sort_keys=True, indent=1) + "\n")
        if config.figures:
            plots.price_with_mas(frame, ticker, out / f"{ticker}_prices.png")
        print(f"ingested {ticker}: {len(frame)} rows -> {out / f'{ticker}_frame.csv'}")
    return 0


def _aligned_closes(frames: dict[str, FeatureFrame]) -> tuple[list, dict[str, np.ndarray]]:
    """Restrict every frame's close series to the dates common to all tickers."""
    common = None
    for frame in frames.values():
        ds = set(frame.dates)
        common = ds if common is None else common & ds
    common = sorted(common)
    if len(common) < 2:
        raise ContractError("tickers share fewer than 2 dates; cannot analyze")
    out = {}
    for ticker, frame in frames.items():
        idx = {d: i for i, d in enumerate(frame.dates)}
        out[ticker] = np.array([frame.columns["close"][idx[d]] for d in common])
    return common, out


def cmd_analyze(config: RunConfig) -> int:
    """EDA artifacts: returns, correlations, risk/return, histogram bins."""
    out = _out_dir(config)
    frames = {t: _load_frame(config, t) for t in config.prices}
    if not frames:
        raise ContractError("no tickers configured")
    dates, closes = _aligned_closes(frames)
    returns = {t: daily_returns(p) for t, p in closes.items()}

    tickers = list(frames)
    lines = ["Date," + ",".join(tickers)]
    for i, d in enumerate(dates[1:]):
        lines.append(",".join([d.isoformat()] + [repr(float(returns[t][i])) for t in tickers]))
    (out / "returns.csv").write_text("\n".join(lines) + "\n")

    corr_returns = evaluation.pearson_matrix(returns)
    corr_prices = evaluation.pearson_matrix(closes)
    (out / "correlation_returns.csv").write_text(corr_returns.to_csv())
    (out / "correlation_prices.csv").write_text(corr_prices.to_csv())

    points = evaluation.risk_return(returns)
    rr_lines = ["ticker,mu,sigma"]
    rr_lines += [f"{p.ticker},{p.mu!r},{p.sigma!r}" for p in points]
    (out / "risk_return.csv").write_text("\n".join(rr_lines) + "\n")

    hist_lines = ["ticker,bin_left,bin_right,count"]
    for t in tickers:
        counts, edges = np.histogram(returns[t], bins=20)
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            hist_lines.append(f"{t},{float(lo)!r},{float(hi)!r},{int(c)}")
    (out / "return_histogram.csv").write_text("\n".join(hist_lines) + "\n")

    if config.figures:
        plots.correlation_heatmap(corr_returns, "Daily return correlation",
                                  out / "correlation_returns.png")
        plots.correlation_heatmap(corr_prices, "Closing price correlation",
                                  out / "correlation_prices.png")
        plots.risk_return_scatter(points, out / "risk_return.png")
        plots.return_histograms(returns, out / "return_histogram.png")
    print(f"analyzed {len(tickers)} ticker(s) -> {out}")
    return 0


def cmd_train(config: RunConfig) -> int:
    """Train the network on one ticker's ingested frame."""
    out = _out_dir(config)
    ticker = config.resolve_ticker()
    frame = _load_frame(config, ticker)
    features = config.feature_columns()
    train_ds, _, _ = evaluation.prepare_datasets(
        frame, config.window_size, features, train_ratio=config.train_ratio,
        paper_faithful=config.paper_faithful)

    net_cfg = NetworkConfig(window_size=config.window_size, n_features=len(features),
                            layer_sizes=tuple(config.layer_sizes),
                            dropout_rate=config.dropout_rate, seed=config.seed,
                            sigmoid_head=config.sigmoid_head)
    network = init_params(net_cfg)
    network, history, adam = train(network, train_ds, config.train_config())

    ckpt = config.checkpoint_path()
    ckpt.write_text(checkpoint_to_json(network, {"t": adam.t, "m": adam.m, "v": adam.v}))
    (out / f"{ticker}_history.csv").write_text(history.to_csv())
    if config.figures:
        plots.loss_curves(history, out / f"{ticker}_history.png")
    best_val = history.val_loss[history.best_epoch - 1]
    print(f"trained {ticker}: stopped at epoch {history.stopped_epoch}, "
          f"best epoch {history.best_epoch}, validation loss {best_val:.6g}")
    return 0


def cmd_evaluate(config: RunConfig) -> int:
    """Metrics and actual-vs-forecast series on the held-out test split."""
    out = _out_dir(config)
    ticker = config.resolve_ticker()
    frame = _load_frame(config, ticker)
    network, _ = checkpoint_from_json(config.checkpoint_path().read_text())

    features = config.feature_columns()
    if network.config.n_features != len(features):
        raise ContractError(
            f"checkpoint expects {network.config.n_features} features, config "
            f"selects {len(features)} ({features}); align feature toggles")
    _, test_ds, scalers = evaluation.prepare_datasets(
        frame, network.config.window_size, features, train_ratio=config.train_ratio,
        paper_faithful=config.paper_faithful)

    dates, actual, forecast = evaluation.predict_series(network, scalers["close"], test_ds)
    report = evaluation.compute_metrics(actual, forecast)
    (out / f"{ticker}_metrics.json").write_text(report.to_json())
    (out / f"{ticker}_metrics.txt").write_text(report.to_table())
    (out / f"{ticker}_predictions.csv").write_text(
        evaluation.prediction_csv(dates, actual, forecast))
    if config.figures:
        plots.actual_vs_predicted(dates, actual, forecast, ticker,
                                  out / f"{ticker}_predictions.png")
    print(report.to_table(), end="")
    return 0


def cmd_sensitivity(config: RunConfig, windows: list[int], no_ablation: bool) -> int:
    """MAPE across window sizes, with and without the sentiment feature."""
    out = _out_dir(config)
    ticker = config.resolve_ticker()
    frame = _load_frame(config, ticker)
    cells = evaluation.window_sensitivity(
        frame, windows, config.train_config(),
        layer_sizes=tuple(config.layer_sizes), dropout_rate=config.dropout_rate,
        ablate_sentiment=not no_ablation, train_ratio=config.train_ratio,
        paper_faithful=config.paper_faithful)
    (out / f"{ticker}_sensitivity.csv").write_text(evaluation.sensitivity_csv(cells))
    if config.figures:
        plots.window_sensitivity_plot(cells, out / f"{ticker}_sensitivity.png")
    for c in cells:
        tag = "with" if c.with_sentiment else "without"
        print(f"window {c.window:>3} {tag:>7} sentiment: MAPE {c.mape:.3f}%")
    return 0


def cmd_synthetic(config: RunConfig) -> int:
    """Write the bundled synthetic fixtures plus ready-to-run config files."""
    out = _out_dir(config)
    series = synthetic.sine_ohlcv(400, seed=config.seed)
    (out / "SINE.csv").write_text(serialize_ohlcv_csv(series))
    calendar = series.dates()
    (out / "news.jsonl").write_text(synthetic.synthetic_news_jsonl(calendar,
                                                                  seed=config.seed))
    coupled = synthetic.sentiment_coupled_frame(300, seed=config.seed)
    (out / "COUPLED_frame.csv").write_text(coupled.to_csv())

    sine_cfg = {
        "prices": {"SINE": str(out / "SINE.csv")},
        "news": str(out / "news.jsonl"),
        "out": str(out), "ticker": "SINE",
        "window_size": 20, "layer_sizes": [16, 8], "epochs": 60, "seed": config.seed,
    }
    (out / "config_sine.json").write_text(json.dumps(sine_cfg, sort_keys=True,
                                                     indent=1) + "\n")
    # COUPLED ships as a pre-built frame, so its config skips the ingest inputs.
    coupled_cfg = {
        "out": str(out), "ticker": "COUPLED",
        "window_size": 10, "layer_sizes": [16, 8], "epochs": 40, "seed": config.seed,
    }
    (out / "config_coupled.json").write_text(json.dumps(coupled_cfg, sort_keys=True,
                                                        indent=1) + "\n")
    print(f"synthetic fixtures written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stockcast",
        description="Sentiment-aware LSTM stock forecasting engine")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="override config seed")
    parser.add_argument("--out", help="override output directory")
    parser.add_argument("--paper-faithful", action="store_true",
                        help="fit scalers on the full series instead of the train split")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip matplotlib figure rendering")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", help="parse and clean price/news inputs into feature frames")
    sub.add_parser("analyze", help="returns, correlations, risk/return statistics")
    sub.add_parser("train", help="train the LSTM and write checkpoint + history")
    sub.add_parser("evaluate", help="metrics and predictions on the test split")
    sens = sub.add_parser("sensitivity", help="MAPE across window sizes")
    sens.add_argument("--windows", default="30,60,90",
                      help="comma-separated window sizes")
    sens.add_argument("--no-ablation", action="store_true",
                      help="skip the without-sentiment rows")
    sub.add_parser("synthetic", help="generate bundled synthetic fixtures")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.load(args.config)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.out is not None:
            config = replace(config, out=args.out)
        if args.paper_faithful:
            config = replace(config, paper_faithful=True)
        if args.no_figures:
            config = replace(config, figures=False)

        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "analyze":
            return cmd_analyze(config)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "evaluate":
            return cmd_evaluate(config)
        if args.command == "sensitivity":
            windows = [int(w) for w in args.windows.split(",") if w.strip()]
            return cmd_sensitivity(config, windows, args.no_ablation)
        if args.command == "synthetic":
            return cmd_synthetic(config)
        raise ContractError(f"unknown command {args.command!r}")
    except (StockcastError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
