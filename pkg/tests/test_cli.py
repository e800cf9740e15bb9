import json
import os

import pytest

from kamtori import cli


def run_cli(args):
    return cli.main(args)


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code = run_cli(["diophantine", "--config", str(cfg),
                    "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_CONFIG
    err = json.loads(capsys.readouterr().out)
    assert err["error"]["code"] == cli.EXIT_CONFIG
    assert "bogus" in err["error"]["message"]


def test_missing_config_file(tmp_path, capsys):
    code = run_cli(["diophantine", "--config", str(tmp_path / "nope.json"),
                    "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_CONFIG


def test_diophantine_artifacts(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["diophantine", "--out", str(out)])
    assert code == cli.EXIT_OK
    data = json.loads((out / "diophantine.json").read_text())
    assert data["gamma"] > 0.0
    assert (out / "run_metadata.json").exists()


def test_resonant_alpha_is_numerical_error(tmp_path, capsys):
    cfg = tmp_path / "res.json"
    cfg.write_text(json.dumps(
        {"problem": {"n": 2, "N": 8, "d": 2, "alpha": [1.0, 0.5],
                     "k_max": 20}}))
    code = run_cli(["herman", "--config", str(cfg), "--out",
                    str(tmp_path / "out")])
    assert code == cli.EXIT_NUMERICAL
    err = json.loads(capsys.readouterr().out)
    assert err["error"]["code"] == cli.EXIT_NUMERICAL


def test_arithmetics_artifacts(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["arithmetics", "--out", str(out)])
    assert code == cli.EXIT_OK
    data = json.loads((out / "arithmetics.json").read_text())
    assert data["laplace"]["certified"]
    assert data["criterion"]["all_passed_up_to_j_max"]


def test_negative_width_rejected(tmp_path, capsys):
    cfg = tmp_path / "neg.json"
    cfg.write_text(json.dumps({"widths": {"s": -0.1, "sigma": 0.1}}))
    code = run_cli(["cohomology", "--config", str(cfg),
                    "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_CONFIG
