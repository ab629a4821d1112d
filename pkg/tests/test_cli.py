import subprocess
import sys

import numpy as np
import pytest

from stripedge.cli import run
from stripedge.image_io import save_pgm

OUTPUTS = ["edges.pgm", "smooth.pgm", "overlay.pgm", "strips.txt", "trace.csv"]


@pytest.fixture
def step_pgm(tmp_path):
    px = np.zeros((32, 32), dtype=np.uint8)
    px[:, 16:] = 255
    path = tmp_path / "step.pgm"
    save_pgm(px, path)
    return path


def contents(directory, names):
    return {n: (directory / n).read_bytes() for n in names}


@pytest.mark.parametrize("cmd", ["detect-static", "detect-update"])
def test_detect_outputs_deterministic(cmd, step_pgm, tmp_path, capsys):
    assert run([cmd, str(step_pgm), "-o", str(tmp_path / "a")]) == 0
    assert run([cmd, str(step_pgm), "-o", str(tmp_path / "b")]) == 0
    a, b = contents(tmp_path / "a", OUTPUTS), contents(tmp_path / "b", OUTPUTS)
    assert a == b
    assert a["edges.pgm"].startswith(b"P5\n32 32\n255\n")
    assert len(a["strips.txt"].splitlines()) > 0
    assert a["trace.csv"].splitlines()[0] == b"iter,x,y,gradsq,predicted_delta,J_eps"
    assert "strips" in capsys.readouterr().out


def test_constant_image_empty_outputs(tmp_path):
    path = tmp_path / "flat.pgm"
    save_pgm(np.full((20, 20), 90, dtype=np.uint8), path)
    assert run(["detect-static", str(path), "-o", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "strips.txt").read_text() == ""
    edges = (tmp_path / "o" / "edges.pgm").read_bytes()
    assert set(edges[len(b"P5\n20 20\n255\n"):]) == {0}


def test_validate_identity(step_pgm, tmp_path, capsys):
    args = ["validate-identity", str(step_pgm), "--trials", "3", "--seed", "1"]
    assert run(args + ["-o", str(tmp_path / "a")]) == 0
    assert run(args + ["-o", str(tmp_path / "b")]) == 0
    assert contents(tmp_path / "a", ["identity.csv"]) == contents(tmp_path / "b", ["identity.csv"])
    assert "max relative residual" in capsys.readouterr().out


def test_validate_expansion(tmp_path):
    args = ["validate-expansion", "--eps", "0.1,0.05", "--point", "0.5,0.25"]
    assert run(args + ["-o", str(tmp_path / "a")]) == 0
    assert run(args + ["-o", str(tmp_path / "b")]) == 0
    a = contents(tmp_path / "a", ["expansion.csv"])
    assert a == contents(tmp_path / "b", ["expansion.csv"])
    assert len(a["expansion.csv"].splitlines()) == 3


def test_validate_tensor(tmp_path, capsys):
    args = ["validate-tensor", "--n", "64", "--eps", "0.25,0.2"]
    assert run(args + ["-o", str(tmp_path / "a")]) == 0
    assert run(args + ["-o", str(tmp_path / "b")]) == 0
    assert contents(tmp_path / "a", ["tensor.csv"]) == contents(tmp_path / "b", ["tensor.csv"])
    assert "limits 1, 10" in capsys.readouterr().out


@pytest.mark.parametrize("extra", [["--kappa", "1.5"], ["--kappa", "0"], ["--delta", "3"],
                                   ["--alpha", "-1"], ["--bogus"]])
def test_usage_errors_exit_2(step_pgm, tmp_path, extra, capsys):
    assert run(["detect-static", str(step_pgm), "-o", str(tmp_path)] + extra) == 2
    err = capsys.readouterr().err
    assert "usage" in err
    if extra[0] == "--kappa":
        assert "open interval (0,1)" in err


def test_missing_input_exit_1(tmp_path, capsys):
    assert run(["detect-static", str(tmp_path / "nope.pgm"), "-o", str(tmp_path)]) == 1
    assert "stripedge: error: loading image" in capsys.readouterr().err


def test_garbage_input_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P5\n4 4\n255\nxx")
    assert run(["detect-static", str(bad), "-o", str(tmp_path)]) == 1


def test_too_small_image_exit_1(tmp_path, capsys):
    path = tmp_path / "tiny.pgm"
    save_pgm(np.zeros((4, 4), dtype=np.uint8), path)
    assert run(["detect-static", str(path), "-o", str(tmp_path)]) == 1
    assert "detection" in capsys.readouterr().err


def test_thin_tensor_strip_exit_1(tmp_path, capsys):
    assert run(["validate-tensor", "--n", "32", "--eps", "0.05", "-o", str(tmp_path)]) == 1


def test_help_lists_defaults(capsys):
    assert run(["detect-static", "--help"]) == 0
    out = capsys.readouterr().out
    for text in ["--alpha", "default: 8", "default: 150", "default: 0.1", "default: 255"]:
        assert text in out


def test_module_entry_point(step_pgm, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "stripedge", "detect-static", str(step_pgm),
                           "-o", str(tmp_path / "m")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "m" / "edges.pgm").exists()
