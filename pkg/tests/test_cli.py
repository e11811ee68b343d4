import csv
import json

import pytest

from dcsense.cli import cli_main
from dcsense.dataset import load_dataset


def _write_config(tmp_path, sweep=None, scenario=None, train=None):
    doc = {
        "scenario": {"n_su": 8, "n_bands": 8, "n_ed": 16, "seed": 7, **(scenario or {})},
        "train": {"epochs": 6, "batch_size": 16, "n_permutations": 1, "patience": 6, **(train or {})},
    }
    if sweep is not None:
        doc["sweep"] = sweep
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_generate_writes_dataset(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "data.jsonl"
    rc = cli_main(["generate", "--config", cfg, "--n-samples", "12", "--out", str(out)])
    assert rc == 0
    assert "wrote 12 SD samples" in capsys.readouterr().out
    ds = load_dataset(str(out))
    assert len(ds) == 12
    assert ds.scenario.n_su == 8


def test_generate_hd_mode(tmp_path):
    cfg = _write_config(tmp_path)
    out = tmp_path / "data.jsonl"
    rc = cli_main(
        ["generate", "--config", cfg, "--mode", "hd", "--gamma-policy", "noise_floor",
         "--n-samples", "8", "--out", str(out)]
    )
    assert rc == 0
    assert load_dataset(str(out)).mode == "HD"


def test_generate_requires_out(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    rc = cli_main(["generate", "--config", cfg, "--n-samples", "4"])
    assert rc == 1
    assert "--out is required" in capsys.readouterr().err


def test_train_then_eval_roundtrip(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    model_path = tmp_path / "model.json"
    rc = cli_main(["train", "--config", cfg, "--n-samples", "40", "--out", str(model_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "best validation accuracy" in out
    assert model_path.exists()
    rc = cli_main(["eval", "--config", cfg, "--model", str(model_path), "--n-samples", "40"])
    assert rc == 0
    line = capsys.readouterr().out
    assert "p_fa=" in line and "p_md=" in line and "sensing_error=" in line


def test_train_from_saved_dataset(tmp_path):
    cfg = _write_config(tmp_path)
    data_path = tmp_path / "train.jsonl"
    assert cli_main(["generate", "--config", cfg, "--n-samples", "40", "--out", str(data_path)]) == 0
    model_path = tmp_path / "model.json"
    rc = cli_main(["train", "--config", cfg, "--data", str(data_path), "--out", str(model_path)])
    assert rc == 0
    assert model_path.exists()


def test_eval_missing_model(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    rc = cli_main(["eval", "--config", cfg, "--model", str(tmp_path / "nope.json")])
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_sweep_writes_csv_and_figure(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        sweep={
            "param": "noise_psd_dbm_hz",
            "values": [-174.0, -164.0],
            "methods": ["KON"],
            "repetitions": 1,
            "n_train": 40,
            "n_eval": 60,
        },
    )
    out = tmp_path / "sweep.csv"
    rc = cli_main(["sweep", "--config", cfg, "--out", str(out)])
    assert rc == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3
    fig = tmp_path / "sweep.png"
    assert fig.exists() and fig.stat().st_size > 0


def test_sweep_no_figure_flag(tmp_path):
    cfg = _write_config(
        tmp_path,
        sweep={
            "param": "n_su",
            "values": [8],
            "methods": ["KON"],
            "repetitions": 1,
            "n_train": 30,
            "n_eval": 40,
        },
    )
    out = tmp_path / "s.csv"
    rc = cli_main(["sweep", "--config", cfg, "--out", str(out), "--no-figure"])
    assert rc == 0
    assert out.exists()
    assert not (tmp_path / "s.png").exists()


def test_sweep_requires_section(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    rc = cli_main(["sweep", "--config", cfg, "--out", str(tmp_path / "x.csv")])
    assert rc == 1
    assert "sweep" in capsys.readouterr().err


def test_bench_writes_csv_and_figure(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    out = tmp_path / "lat.csv"
    rc = cli_main(
        ["bench", "--config", cfg, "--iters", "10", "--warmup", "2", "--n-train", "40", "--out", str(out)]
    )
    assert rc == 0
    text = capsys.readouterr().out
    assert "DCS-SD" in text and "KON" in text and "SVM-SD" in text
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 4
    assert (tmp_path / "lat.png").exists()


def test_unknown_flag_returns_argparse_code():
    assert cli_main(["generate", "--definitely-not-a-flag"]) == 2


def test_missing_config_file(tmp_path, capsys):
    rc = cli_main(["generate", "--config", str(tmp_path / "ghost.json"), "--out", str(tmp_path / "d.jsonl")])
    assert rc == 1
    assert "not found" in capsys.readouterr().err
