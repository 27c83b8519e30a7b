"""Sentiment-aware LSTM stock forecasting engine.

Library surface: OHLCV ingestion (`market_data`), feature engineering
(`features`), lexicon sentiment (`sentiment`), the from-scratch LSTM
(`neural`), the training loop (`training`), metrics and EDA (`evaluation`),
synthetic fixtures (`synthetic`), and the CLI (`cli`).
"""

__version__ = "0.1.0"
