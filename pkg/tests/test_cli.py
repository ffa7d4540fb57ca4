import json
import os

import numpy as np
import pytest

from sparseindex.cli import main


def run_cli(args):
    return main([str(a) for a in args])


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture
def train_csv(tmp_path):
    out = tmp_path / "sim"
    assert run_cli(["simulate", "--model", "si", "--n", "60", "--p", "4",
                    "--seed", "7", "--out", out, "--name", "train"]) == 0
    return out / "train.csv"


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run_cli(["simulate", "--model", "si", "--n", "100", "--p", "10",
                        "--seed", "7", "--out", out]) == 0
    assert read_bytes(a / "synthetic.csv") == read_bytes(b / "synthetic.csv")
    assert read_bytes(a / "run.json") == read_bytes(b / "run.json")


def test_fit_predict_round_trip(tmp_path, train_csv, capsys):
    fit_out = tmp_path / "fit"
    code = run_cli(["fit", train_csv, "--target", "y", "--steps", "80", "--chains", "1",
                    "--c", "5.0", "--seed", "3", "--out", fit_out])
    assert code == 0
    model_path = fit_out / "fit_model.json"
    model = json.loads(read_bytes(model_path))
    assert model["schema_version"] == 1
    assert len(model["index_values"]) == 4
    capsys.readouterr()

    pred_out = tmp_path / "pred"
    assert run_cli(["predict", train_csv, "--model", model_path, "--out", pred_out]) == 0
    printed = capsys.readouterr().out
    mse = float(printed.split("test_mse=")[1].splitlines()[0])
    # predicting the training file reproduces the fitted empirical risk
    assert mse == pytest.approx(model["risk"], abs=1e-9)

    preds = open(pred_out / "predict_predictions.csv").read().splitlines()
    assert preds[0] == "prediction"
    assert len(preds) == 1 + 60


def test_model_json_round_trips_predictions(tmp_path, train_csv, capsys):
    fit_out = tmp_path / "fit"
    run_cli(["fit", train_csv, "--target", "y", "--steps", "60", "--chains", "1",
             "--c", "5.0", "--seed", "4", "--out", fit_out])
    capsys.readouterr()
    model_path = fit_out / "fit_model.json"

    outs = []
    for name in ("p1", "p2"):
        out = tmp_path / name
        run_cli(["predict", train_csv, "--model", model_path, "--out", out, "--name", name])
        outs.append(read_bytes(out / f"{name}_predictions.csv"))
    capsys.readouterr()
    assert outs[0] == outs[1]

    # reload -> re-save -> predictions identical to 1e-15
    model = json.loads(read_bytes(model_path))
    model_path2 = tmp_path / "resaved.json"
    with open(model_path2, "w") as fh:
        json.dump(model, fh, indent=2)
        fh.write("\n")
    out3 = tmp_path / "p3"
    run_cli(["predict", train_csv, "--model", model_path2, "--out", out3, "--name", "p3"])
    capsys.readouterr()
    a = np.loadtxt(tmp_path / "p1" / "p1_predictions.csv", skiprows=1)
    b = np.loadtxt(out3 / "p3_predictions.csv", skiprows=1)
    assert np.max(np.abs(a - b)) <= 1e-15


def test_fit_replay_byte_identical(tmp_path, train_csv):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert run_cli(["fit", train_csv, "--target", "y", "--steps", "50", "--chains", "2",
                        "--c", "5.0", "--seed", "11", "--out", out]) == 0
        outs.append(out)
    assert read_bytes(outs[0] / "fit_model.json") == read_bytes(outs[1] / "fit_model.json")
    assert read_bytes(outs[0] / "fit_linkplot.csv") == read_bytes(outs[1] / "fit_linkplot.csv")


def test_benchmark_from_toml(tmp_path, train_csv):
    config = tmp_path / "exp.toml"
    config.write_text(
        """
name = "toy"
methods = ["lasso", "nw"]
repetitions = 2
seed = 5

[source]
type = "csv"
path = "%s"
target = "y"
augment = false
""" % train_csv,
        encoding="utf-8",
    )
    out_a, out_b = tmp_path / "ba", tmp_path / "bb"
    for out in (out_a, out_b):
        assert run_cli(["benchmark", "--config", config, "--out", out]) == 0
    assert read_bytes(out_a / "toy_summary.csv") == read_bytes(out_b / "toy_summary.csv")
    assert read_bytes(out_a / "toy_raw.csv") == read_bytes(out_b / "toy_raw.csv")
    lines = open(out_a / "toy_summary.csv").read().splitlines()
    assert lines[0] == "metric,lasso,nw"
    assert lines[1].startswith("median,")
    assert os.path.exists(out_a / "run.json")


def test_benchmark_four_method_columns(tmp_path):
    config = tmp_path / "exp.toml"
    config.write_text(
        """
name = "tiny"
methods = ["fourier", "hhi", "lasso", "nw"]
repetitions = 1
seed = 2

[source]
type = "synthetic"
model = "si"
n = 40
p = 4

[gibbs]
C = 5.0
steps = 60
chains = 1
""",
        encoding="utf-8",
    )
    out = tmp_path / "bench"
    assert run_cli(["benchmark", "--config", config, "--out", out]) == 0
    lines = open(out / "tiny_summary.csv").read().splitlines()
    assert lines[0] == "metric,fourier,hhi,lasso,nw"
    metrics = [l.split(",")[0] for l in lines[1:]]
    assert metrics == ["median", "mean", "sd", "n_missing"]
    assert os.path.exists(out / "tiny_linkplot.csv")


def test_usage_and_data_error_exit_codes(tmp_path):
    assert run_cli(["fit"]) == 1  # missing required arguments
    assert run_cli(["no-such-command"]) == 1
    missing = tmp_path / "nope.csv"
    assert run_cli(["fit", missing, "--target", "y", "--out", tmp_path / "o"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n", encoding="utf-8")
    assert run_cli(["fit", bad, "--target", "y", "--out", tmp_path / "o2"]) == 2
