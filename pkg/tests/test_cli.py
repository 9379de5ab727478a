import numpy as np
import pytest

from ccastereo import cli
from ccastereo.io import read_pfm, write_pfm

FAST = ["--set", "scales=1", "--set", "iterations=1", "--set", "d_min=-2", "--set", "d_max=2"]


@pytest.fixture
def pair(tmp_path):
    out = tmp_path / "syn"
    assert cli.main(["synth", "--width", "64", "--height", "48", "--shift", "0.3",
                     "--out", str(out)]) == 0
    return out


def _match(cmd, pair, out):
    return cli.main([cmd, "--left", str(pair / "left.pfm"), "--right", str(pair / "right.pfm"),
                     "--gt", str(pair / "gt.pfm"), "--id", "p", "--out", str(out)] + FAST)


def test_synth_writes_pair(pair):
    gt = read_pfm(pair / "gt.pfm")
    assert gt.shape == (48, 64) and np.allclose(gt, 0.3)


def test_run_and_sgm_outputs(pair, tmp_path):
    assert _match("run", pair, tmp_path / "cca") == 0
    assert _match("sgm", pair, tmp_path / "sgm") == 0
    a, b = read_pfm(tmp_path / "cca" / "p.pfm"), read_pfm(tmp_path / "sgm" / "p.pfm")
    assert a.shape == b.shape == (48, 64)
    for d in ("cca", "sgm"):
        files = {p.name for p in (tmp_path / d).iterdir()}
        assert {"config.txt", "p.pfm", "p.png", "p.txt", "p_metrics.txt",
                "p_metrics.json"} <= files


def test_eval_identity(pair, tmp_path, capsys):
    assert cli.main(["eval", "--est", str(pair / "gt.pfm"), "--gt", str(pair / "gt.pfm"),
                     "--out", str(tmp_path / "ev")]) == 0
    out = capsys.readouterr().out
    assert "bad_px_1.0 = 0.0000" in out and "rmse = 0.000000" in out


def test_eval_dataset(pair, tmp_path, capsys):
    (pair / "list.txt").write_text("x left.pfm right.pfm gt.pfm\ny left.pfm right.pfm gt.pfm\n")
    assert cli.main(["eval", "--dataset", str(pair / "list.txt"), "--method", "sgm",
                     "--out", str(tmp_path / "ev")] + FAST) == 0
    out = capsys.readouterr().out
    assert "[x]" in out and "[dataset]" in out
    assert (tmp_path / "ev" / "dataset_metrics.json").is_file()


def test_calibrate(capsys):
    assert cli.main(["calibrate-histeq", "--inject-bias", "0.1"]) == 0
    val = float(capsys.readouterr().out.split("=")[1])
    assert abs(val - 0.1) <= 0.02


def test_exit_codes(pair, tmp_path, monkeypatch):
    assert cli.main(["run", "--left", str(tmp_path / "nope.pfm"), "--right",
                     str(pair / "right.pfm"), "--out", str(tmp_path / "o")]) == 1
    assert cli.main(["run", "--left", str(pair / "left.pfm"), "--right",
                     str(pair / "right.pfm"), "--set", "bogus=1", "--out", str(tmp_path / "o")]) == 2
    write_pfm(tmp_path / "small.pfm", np.zeros((48, 32), np.float32))
    assert cli.main(["run", "--left", str(pair / "left.pfm"), "--right",
                     str(tmp_path / "small.pfm"), "--out", str(tmp_path / "o")]) == 1

    from ccastereo.errors import InvariantViolation

    def boom(*a, **k):
        raise InvariantViolation("forced")
    monkeypatch.setattr(cli, "run_cca", boom)
    assert _match("run", pair, tmp_path / "x") == 3
