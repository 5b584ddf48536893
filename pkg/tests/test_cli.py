"""Command-line surface: reproducibility, dispatch, and exit codes."""

import json
import math

import numpy as np
import pytest

from advcert.cli import (
    EXIT_OK,
    EXIT_PROPERTY,
    EXIT_VALIDATION,
    load_model,
    main,
    save_model,
)
from advcert.core import load_dataset
from advcert.linear import LinearModel
from advcert.network import NeuralNet


def run(args):
    return main(args)


def test_gen_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["gen", "--kind", "gaussians", "--n", "50", "--m", "2", "--gap", "4",
            "--noise", "1", "--seed", "7"]
    assert run(base + ["--out", str(a)]) == EXIT_OK
    assert run(base + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_gen_kinds(tmp_path):
    multi = tmp_path / "multi.csv"
    assert run(["gen", "--kind", "gaussians", "--K", "3", "--n", "30", "--m", "2",
                "--seed", "1", "--out", str(multi)]) == EXIT_OK
    ds = load_dataset(multi)
    assert set(np.unique(ds.labels.indices)) <= {0, 1, 2}
    reg = tmp_path / "reg.csv"
    assert run(["gen", "--kind", "regression-line", "--n", "30", "--m", "3",
                "--seed", "1", "--out", str(reg)]) == EXIT_OK
    vals = load_dataset(reg).labels.values
    assert vals.dtype == float and not np.all(vals == np.round(vals))


def test_train_certify_attack_pipeline(tmp_path):
    data = tmp_path / "d.csv"
    run(["gen", "--n", "60", "--m", "2", "--gap", "5", "--noise", "0.5",
         "--seed", "3", "--out", str(data)])
    model = tmp_path / "m.json"
    assert run(["train", "--alg", "convex", "--data", str(data), "--p", "inf",
                "--epsilon", "0.1", "--iters", "500", "--out", str(model)]) == EXIT_OK
    cert = tmp_path / "cert.csv"
    assert run(["certify", "--model", str(model), "--data", str(data), "--p", "inf",
                "--epsilon", "0.1", "--loss", "hinge", "--out", str(cert)]) == EXIT_OK
    header, row = cert.read_text().strip().splitlines()
    cols = header.split(",")
    vals = dict(zip(cols, row.split(",")))
    terms = [float(vals[c]) for c in ("empirical_term", "perturbation_term",
                                      "complexity_term", "confidence_term")]
    assert float(vals["total"]) == pytest.approx(sum(terms), abs=1e-12)
    atk = tmp_path / "atk.csv"
    assert run(["attack", "--model", str(model), "--data", str(data), "--p", "inf",
                "--epsilon", "0.1", "--loss", "hinge", "--steps", "10",
                "--restarts", "2", "--out", str(atk)]) == EXIT_OK
    attack_rows = atk.read_text().strip().splitlines()[1:]
    mean_attack = np.mean([float(r.split(",")[1]) for r in attack_rows])
    # one-sided soundness against the certified empirical robust term
    assert mean_attack <= float(vals["empirical_term"]) + 1e-9


def test_certify_eps_zero_perturbation_term(tmp_path):
    data = tmp_path / "d.csv"
    run(["gen", "--n", "40", "--m", "2", "--seed", "5", "--out", str(data)])
    model = tmp_path / "m.json"
    save_model(LinearModel(np.array([1.0, -0.5]), 0.2), model)
    cert = tmp_path / "c.csv"
    assert run(["certify", "--model", str(model), "--data", str(data),
                "--epsilon", "0", "--loss", "hinge", "--out", str(cert)]) == EXIT_OK
    row = cert.read_text().strip().splitlines()[1]
    vals = row.split(",")
    header = cert.read_text().splitlines()[0].split(",")
    assert float(dict(zip(header, vals))["perturbation_term"]) == 0.0


def test_tree_training_and_nn_certify(tmp_path):
    data = tmp_path / "d.csv"
    run(["gen", "--n", "40", "--m", "2", "--gap", "5", "--noise", "0.5",
         "--seed", "2", "--out", str(data)])
    model = tmp_path / "nn.json"
    log = tmp_path / "log.csv"
    assert run(["train", "--alg", "tree", "--data", str(data), "--p", "inf",
                "--epsilon", "0.05", "--widths", "2,6,1", "--iters", "50",
                "--out", str(model), "--log", str(log)]) == EXIT_OK
    lines = log.read_text().strip().splitlines()
    assert lines[0] == "iter,objective,grad_norm"
    assert len(lines) == 52  # 50 iterations + final evaluation + header
    loaded = load_model(model)
    assert isinstance(loaded, NeuralNet)
    assert run(["certify", "--model", str(model), "--data", str(data), "--p", "inf",
                "--epsilon", "0.05", "--loss", "hinge_truncated"]) == EXIT_OK
    assert run(["certify", "--model", str(model), "--data", str(data), "--p", "inf",
                "--epsilon", "0.05", "--form", "xe", "--loss", "xe"]) == EXIT_OK


def test_model_json_round_trip_precision(tmp_path):
    theta = np.array([1.0 / 3.0, -2.0 / 7.0, 1e-15])
    model = LinearModel(theta, math.pi)
    path = tmp_path / "m.json"
    save_model(model, path)
    back = load_model(path)
    assert np.array_equal(back.theta, theta)
    assert back.b == math.pi
    kinds = json.loads(path.read_text())
    assert kinds["kind"] == "linear"


def test_verify_command_and_exit_codes(tmp_path):
    out = tmp_path / "report.csv"
    assert run(["verify", "--suite", "sdp", "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[0] == "check_name,instances,max_violation,pass"


def test_validation_errors_exit_1(tmp_path):
    assert run(["certify", "--model", str(tmp_path / "missing.json"),
                "--data", str(tmp_path / "missing.csv")]) == EXIT_VALIDATION
    assert run(["train", "--alg", "tree", "--data", str(tmp_path / "missing.csv"),
                "--out", str(tmp_path / "m.json")]) == EXIT_VALIDATION
    data = tmp_path / "d.csv"
    run(["gen", "--n", "10", "--m", "2", "--seed", "0", "--out", str(data)])
    assert run(["train", "--alg", "convex", "--data", str(data), "--p", "7",
                "--out", str(tmp_path / "m.json")]) == EXIT_VALIDATION
    assert run(["gen", "--n", "0", "--m", "2", "--out",
                str(tmp_path / "x.csv")]) == EXIT_VALIDATION


def test_demo_command(capsys):
    assert run(["demo", "--a", "0.5", "--b", "10", "--c", "2", "--epsilon", "1",
                "--rho", "1", "--mode", "max-over-k"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "relaxation loss    1" in out
    assert "tree loss          0" in out


def test_reg_grid_cli(tmp_path):
    data = tmp_path / "d.csv"
    run(["gen", "--n", "30", "--m", "1", "--gap", "6", "--noise", "0.3",
         "--seed", "4", "--out", str(data)])
    model = tmp_path / "m.json"
    assert run(["train", "--alg", "reg-grid", "--data", str(data), "--p", "inf",
                "--epsilon", "0.1", "--iters", "200", "--grid", "5",
                "--out", str(model)]) == EXIT_OK
    assert isinstance(load_model(model), LinearModel)
