import json

import pytest

from sctxtnn.cli import EXIT_FAILURE, EXIT_INPUT, EXIT_OK, main
from sctxtnn.construction import ConstructionReport
from sctxtnn.model import (
    LabeledDataset,
    RegressorDomain,
    sample_random_model,
)
from sctxtnn.networks import load_params
from sctxtnn.rng import RandomSource


@pytest.fixture
def model_file(tmp_path):
    m = sample_random_model(3, 1, (-1 / 3, 1 / 3), (-1.0, 1.0),
                            RandomSource(1).derive("m"))
    path = tmp_path / "model.json"
    m.save(path)
    return path


@pytest.fixture
def domain_file(tmp_path):
    path = tmp_path / "domain.json"
    path.write_text(json.dumps(RegressorDomain.cube(1, -4.0, 4.0).to_json_dict()))
    return path


def tiny_config_file(tmp_path, **overrides):
    cfg = {
        "num_simulations": 2, "n_total": 120, "n_train": 50, "n_val": 30,
        "n_test": 40, "epochs": 20, "learning_rate": 0.001, "noise_sd": 0.01,
        "seed": 7,
        "roster": [
            {"name": "SCtxtNN", "kind": "sctxtnn", "num_contexts": 3},
            {"name": "SmallFF", "kind": "ff", "layer_sizes": [2, 4, 4, 1]},
        ],
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_construct_writes_report_and_exits_zero(tmp_path, model_file, domain_file, capsys):
    out = tmp_path / "report.json"
    rc = main(["construct", str(model_file), str(domain_file), str(out), "--grid", "40"])
    assert rc == EXIT_OK
    assert "max_abs_error" in capsys.readouterr().out
    report = ConstructionReport.load(out)
    assert report.max_abs_error < 1e-9


def test_construct_missing_model_is_input_error(tmp_path, domain_file, capsys):
    rc = main(["construct", str(tmp_path / "nope.json"), str(domain_file),
               str(tmp_path / "r.json")])
    assert rc == EXIT_INPUT
    assert "not found" in capsys.readouterr().err


def test_construct_malformed_model_is_input_error(tmp_path, domain_file):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["construct", str(bad), str(domain_file),
                 str(tmp_path / "r.json")]) == EXIT_INPUT
    bad.write_text(json.dumps({"c": 2}))
    assert main(["construct", str(bad), str(domain_file),
                 str(tmp_path / "r.json")]) == EXIT_INPUT


def test_verify_construction_round_trip(tmp_path, model_file, domain_file):
    report_path = tmp_path / "report.json"
    assert main(["construct", str(model_file), str(domain_file),
                 str(report_path), "--grid", "30"]) == EXIT_OK
    rc = main(["verify-construction", str(report_path), str(model_file),
               str(domain_file), "--grid", "30"])
    assert rc == EXIT_OK


def test_verify_construction_detects_tampering(tmp_path, model_file, domain_file, capsys):
    report_path = tmp_path / "report.json"
    main(["construct", str(model_file), str(domain_file), str(report_path),
          "--grid", "30"])
    d = json.loads(report_path.read_text())
    d["params"]["theta"][-2] += 0.5  # corrupt one output weight
    report_path.write_text(json.dumps(d))
    rc = main(["verify-construction", str(report_path), str(model_file),
               str(domain_file), "--grid", "30"])
    assert rc == EXIT_FAILURE


def test_gen_data(tmp_path, model_file, capsys):
    out = tmp_path / "data.csv"
    rc = main(["gen-data", "--model", str(model_file), "--out", str(out),
               "--sizes", "40,20,20", "--seed", "3"])
    assert rc == EXIT_OK
    ds = LabeledDataset.from_csv(out)
    assert ds.num_rows == 80
    assert ds.train_idx.size == 40 and ds.test_idx.size == 20
    rc = main(["gen-data", "--model", str(model_file), "--out", str(out),
               "--sizes", "40,20"])
    assert rc == EXIT_INPUT


def test_train_command(tmp_path, model_file):
    data = tmp_path / "data.csv"
    main(["gen-data", "--model", str(model_file), "--out", str(data),
          "--sizes", "50,25,25", "--seed", "4"])
    outdir = tmp_path / "run"
    rc = main(["train", "--data", str(data), "--arch", "sctxtnn:3",
               "--epochs", "15", "--out", str(outdir), "--seed", "5"])
    assert rc == EXIT_OK
    params = load_params(outdir / "params.json")
    assert params.num_contexts == 3
    lines = (outdir / "curve.csv").read_text().splitlines()
    assert lines[0] == "epoch,train_mse,val_mse"
    assert len(lines) == 16

    rc = main(["train", "--data", str(data), "--arch", "ff:2,4,4,1",
               "--epochs", "5", "--out", str(tmp_path / "run2")])
    assert rc == EXIT_OK
    assert main(["train", "--data", str(data), "--arch", "tree:9",
                 "--epochs", "1", "--out", str(tmp_path / "run3")]) == EXIT_INPUT
    assert main(["train", "--data", str(tmp_path / "missing.csv"),
                 "--arch", "sctxtnn:3", "--epochs", "1",
                 "--out", str(tmp_path / "run4")]) == EXIT_INPUT


def test_experiment_and_report(tmp_path, capsys):
    cfg = tiny_config_file(tmp_path)
    outdir = tmp_path / "exp"
    rc = main(["experiment", "--config", str(cfg), "--out", str(outdir)])
    assert rc == EXIT_OK
    for name in ("results.csv", "curves.csv", "summary.json", "config.json"):
        assert (outdir / name).exists()
    # refuses to clobber without --force
    assert main(["experiment", "--config", str(cfg), "--out", str(outdir)]) == EXIT_INPUT
    assert main(["experiment", "--config", str(cfg), "--out", str(outdir),
                 "--force"]) == EXIT_OK
    capsys.readouterr()

    rc = main(["report", "--out", str(outdir)])
    assert rc == EXIT_OK
    assert (outdir / "loss_curves.svg").read_text().startswith("<?xml")
    assert (outdir / "excess_box.svg").exists()


def test_experiment_seed_override_changes_results(tmp_path):
    cfg = tiny_config_file(tmp_path)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["experiment", "--config", str(cfg), "--out", str(out_a)]) == EXIT_OK
    assert main(["experiment", "--config", str(cfg), "--out", str(out_b),
                 "--seed", "99"]) == EXIT_OK
    assert (out_a / "results.csv").read_text() != (out_b / "results.csv").read_text()
    assert json.loads((out_b / "config.json").read_text())["seed"] == 99


def test_experiment_print_default_config(capsys):
    assert main(["experiment", "--print-default-config"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["num_simulations"] == 50 and d["epochs"] == 20000
    assert [m["name"] for m in d["roster"]] == ["SCtxtNN", "SmallFF", "LargeFF"]


def test_experiment_requires_out(capsys):
    assert main(["experiment"]) == EXIT_INPUT


def test_report_on_missing_directory(tmp_path):
    assert main(["report", "--out", str(tmp_path / "nothing")]) == EXIT_INPUT


def test_report_rejects_malformed_results(tmp_path):
    outdir = tmp_path / "exp"
    outdir.mkdir()
    (outdir / "results.csv").write_text("wrong,header\n1,2\n")
    (outdir / "curves.csv").write_text("model,epoch,mean_train_mse,mean_val_mse\n")
    assert main(["report", "--out", str(outdir)]) == EXIT_INPUT
