import json

import numpy as np
import pytest

from stockcast.cli import main
from stockcast.evaluation import pearson_matrix
from stockcast.features import FeatureFrame, daily_returns


def base_config(out, **overrides):
    cfg = {
        "prices": {"SINE": str(out / "SINE.csv")},
        "news": str(out / "news.jsonl"),
        "out": str(out),
        "ticker": "SINE",
        "window_size": 10,
        "layer_sizes": [4, 3],
        "dropout_rate": 0.1,
        "epochs": 3,
        "batch_size": 16,
        "patience": 5,
        "ma_windows": [3, 5],
        "seed": 0,
        "figures": False,
    }
    cfg.update(overrides)
    return cfg


def write_config(out, **overrides):
    path = out / "config.json"
    path.write_text(json.dumps(base_config(out, **overrides)))
    return str(path)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """synthetic -> ingest -> train -> evaluate, shared by the read-only tests."""
    out = tmp_path_factory.mktemp("run")
    cfg = write_config(out)
    assert main(["--config", cfg, "synthetic"]) == 0
    assert main(["--config", cfg, "ingest"]) == 0
    assert main(["--config", cfg, "train"]) == 0
    assert main(["--config", cfg, "evaluate"]) == 0
    return out, cfg


class TestSynthetic:
    def test_fixture_files_written(self, workspace):
        out, _ = workspace
        for name in ("SINE.csv", "news.jsonl", "COUPLED_frame.csv",
                     "config_sine.json", "config_coupled.json"):
            assert (out / name).exists()


class TestIngest:
    def test_frame_columns(self, workspace):
        out, _ = workspace
        frame = FeatureFrame.from_csv((out / "SINE_frame.csv").read_text())
        assert set(frame.columns) == {"close", "sentiment", "ma3", "ma5"}
        assert (out / "SINE_scaler.json").exists()

    def test_scaler_file_contents(self, workspace):
        out, _ = workspace
        doc = json.loads((out / "SINE_scaler.json").read_text())
        assert set(doc) == {"close", "sentiment"}
        assert doc["close"]["x_max"] > doc["close"]["x_min"]

    def test_rerun_is_byte_identical(self, workspace):
        out, cfg = workspace
        before = (out / "SINE_frame.csv").read_bytes()
        assert main(["--config", cfg, "ingest"]) == 0
        assert (out / "SINE_frame.csv").read_bytes() == before

    def test_missing_news_with_sentiment_fails(self, tmp_path, capsys):
        cfg = write_config(tmp_path, news=str(tmp_path / "absent.jsonl"))
        assert main(["--config", cfg, "synthetic"]) == 0
        (tmp_path / "news.jsonl").unlink()
        assert main(["--config", cfg, "ingest"]) == 1
        assert "news" in capsys.readouterr().err

    def test_sentiment_disabled_drops_column(self, tmp_path):
        cfg = write_config(tmp_path, use_sentiment=False)
        assert main(["--config", cfg, "synthetic"]) == 0
        assert main(["--config", cfg, "ingest"]) == 0
        frame = FeatureFrame.from_csv((tmp_path / "SINE_frame.csv").read_text())
        assert "sentiment" not in frame.columns


class TestTrain:
    def test_outputs_exist(self, workspace):
        out, _ = workspace
        assert (out / "SINE_model.json").exists()
        history = (out / "SINE_history.csv").read_text()
        assert history.splitlines()[0] == "epoch,train_loss,val_loss"
        assert len(history.splitlines()) >= 2

    def test_rerun_byte_identical(self, workspace):
        out, cfg = workspace
        ckpt = (out / "SINE_model.json").read_bytes()
        hist = (out / "SINE_history.csv").read_bytes()
        assert main(["--config", cfg, "train"]) == 0
        assert (out / "SINE_model.json").read_bytes() == ckpt
        assert (out / "SINE_history.csv").read_bytes() == hist

    def test_window_larger_than_data_fails(self, tmp_path, capsys):
        cfg = write_config(tmp_path, window_size=5000)
        assert main(["--config", cfg, "synthetic"]) == 0
        assert main(["--config", cfg, "ingest"]) == 0
        assert main(["--config", cfg, "train"]) == 1
        assert capsys.readouterr().err.startswith("error:")


class TestEvaluate:
    def test_outputs_exist_and_agree(self, workspace):
        out, _ = workspace
        doc = json.loads((out / "SINE_metrics.json").read_text())
        assert set(doc) == {"n", "mae", "mse", "rmse", "mape_percent"}
        assert doc["rmse"] == pytest.approx(doc["mse"] ** 0.5, rel=1e-12)
        lines = (out / "SINE_predictions.csv").read_text().splitlines()
        assert lines[0] == "date,actual,forecast"
        assert len(lines) - 1 == doc["n"]

    def test_feature_mismatch_detected(self, workspace, tmp_path, capsys):
        out, _ = workspace
        cfg = write_config(out, use_sentiment=False,
                           checkpoint=str(out / "SINE_model.json"))
        assert main(["--config", cfg, "evaluate"]) == 1
        assert "feature" in capsys.readouterr().err


class TestAnalyze:
    def test_single_ticker_identity_matrix(self, workspace):
        out, cfg = workspace
        assert main(["--config", cfg, "analyze"]) == 0
        lines = (out / "correlation_returns.csv").read_text().splitlines()
        assert lines[0] == ",SINE"
        assert lines[1].split(",") == ["SINE", "1.0"]

    def test_two_identical_tickers_fully_correlated(self, tmp_path):
        cfg_path = tmp_path / "config.json"
        cfg = base_config(tmp_path)
        assert main(["--config", str(write_config(tmp_path)), "synthetic"]) == 0
        cfg["prices"] = {"A": str(tmp_path / "SINE.csv"),
                         "B": str(tmp_path / "SINE.csv")}
        cfg.pop("ticker")
        cfg_path.write_text(json.dumps(cfg))
        assert main(["--config", str(cfg_path), "ingest"]) == 0
        assert main(["--config", str(cfg_path), "analyze"]) == 0
        lines = (tmp_path / "correlation_returns.csv").read_text().splitlines()
        assert lines[1].split(",")[2] == "1.0"

    def test_outputs_match_module_oracles(self, workspace):
        out, cfg = workspace
        assert main(["--config", cfg, "analyze"]) == 0
        frame = FeatureFrame.from_csv((out / "SINE_frame.csv").read_text())
        returns = daily_returns(frame.columns["close"])
        expected = pearson_matrix({"SINE": returns}).values[0, 0]
        lines = (out / "correlation_returns.csv").read_text().splitlines()
        assert float(lines[1].split(",")[1]) == expected
        rr = (out / "risk_return.csv").read_text().splitlines()
        assert rr[0] == "ticker,mu,sigma"
        mu = float(rr[1].split(",")[1])
        assert mu == pytest.approx(float(np.mean(returns)), rel=1e-12)


class TestSensitivity:
    def test_table_shape(self, workspace):
        out, cfg = workspace
        assert main(["--config", cfg, "sensitivity"]) == 0
        lines = (out / "SINE_sensitivity.csv").read_text().splitlines()
        assert lines[0] == "window,with_sentiment,mape"
        assert len(lines) == 1 + 6    # three windows x ablation


class TestFigures:
    def test_figures_rendered_when_enabled(self, tmp_path):
        cfg = write_config(tmp_path, figures=True, epochs=2)
        for cmd in ("synthetic", "ingest", "train", "evaluate", "analyze"):
            assert main(["--config", cfg, cmd]) == 0
        for name in ("SINE_prices.png", "SINE_history.png", "SINE_predictions.png",
                     "correlation_returns.png", "risk_return.png",
                     "return_histogram.png"):
            assert (tmp_path / name).exists(), name


class TestConfig:
    def test_unknown_keys_rejected(self, tmp_path, capsys):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"bogus_key": 1}))
        assert main(["--config", str(path), "ingest"]) == 1
        assert "bogus_key" in capsys.readouterr().err

    def test_seed_override(self, tmp_path):
        cfg = write_config(tmp_path)
        assert main(["--config", cfg, "--seed", "7", "synthetic"]) == 0
        assert (tmp_path / "SINE.csv").exists()
