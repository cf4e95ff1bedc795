import json
import subprocess
import sys

import pytest

from hyperrank.cli import main
from hyperrank.report import dumps, format_float

FAST = {
    "curvature": ["--samples", "20"],
    "embed": ["--samples", "100"],
    "stretch": ["--samples", "50"],
    "bilipschitz": ["--samples", "5"],
}


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(tmp_path, *argv, out="out.json"):
    path = tmp_path / out
    code = main([*argv, "--out", str(path)])
    return code, path


@pytest.mark.parametrize("command", sorted(FAST))
def test_commands_are_byte_reproducible(tmp_path, command):
    cfg = write_cfg(tmp_path, "n_curves = 2\nconstant_samples = 100\n")
    c1, a = run(tmp_path, command, "--config", cfg, *FAST[command], out="a.json")
    c2, b = run(tmp_path, command, "--config", cfg, *FAST[command], out="b.json")
    assert c1 == c2 == 0
    assert a.read_bytes() == b.read_bytes()
    body = json.loads(a.read_text())
    assert body["command"] == command and body["schema_version"] == 1


def test_seed_changes_samples(tmp_path):
    _, a = run(tmp_path, "curvature", "--samples", "5", "--seed", "1", out="a.json")
    _, b = run(tmp_path, "curvature", "--samples", "5", "--seed", "2", out="b.json")
    assert a.read_bytes() != b.read_bytes()


def test_curvature_on_the_pullback(tmp_path):
    code, out = run(tmp_path, "curvature", "--samples", "10")
    body = json.loads(out.read_text())
    assert code == 0
    assert body["min_K"] == pytest.approx(-0.5, abs=1e-9)
    assert body["max_K"] == pytest.approx(-0.5, abs=1e-9)


def test_embed_report(tmp_path):
    code, out = run(tmp_path, "embed", "--samples", "100")
    body = json.loads(out.read_text())
    assert code == 0
    assert body["tt_entry"] == 2.0 and body["tt_entry_spread"] == 0.0
    assert body["t_row_offdiag_max"] == 0.0
    assert body["lambda_threshold_unmargined"] == pytest.approx(2.0, abs=1e-8)


def test_empty_bilipschitz_run(tmp_path):
    cfg = write_cfg(tmp_path, "n_pairs = 0\nn_curves = 0\n")
    code, out = run(tmp_path, "bilipschitz", "--config", cfg)
    body = json.loads(out.read_text())
    assert code == 0
    assert body["pairs"] == [] and body["constructed_paths"] == []
    assert body["min_ratio"] is None
    assert out.with_suffix(".csv").read_text().count("\n") == 1  # header only


def test_fault_injection_is_recorded_not_fatal(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "distance_method = bvp\nsolver_tol = 1e-30\nn_pairs = 1\nn_curves = 0\n")
    code, out = run(tmp_path, "bilipschitz", "--config", cfg)
    body = json.loads(out.read_text())
    assert code == 0
    assert body["errors"] == 1 and body["pairs"][0]["error"].startswith("NoConvergence")
    assert body["pairs"][0]["d_y"] >= body["pairs"][0]["d_x"]
    assert "warning" in capsys.readouterr().err


def test_rank(capsys):
    assert main(["rank", "--dims", "2,3,4"]) == 0
    assert capsys.readouterr().out.strip() == "6"
    assert main(["rank", "--dims", "2,2"]) == 0
    assert capsys.readouterr().out.strip() == "2"
    assert main(["rank", "--dims", "1,2"]) == 2
    assert main(["rank", "--dims", "two"]) == 2


@pytest.mark.parametrize("text,command,fragment", [
    ("space = dsl(\"w\")\nbegin metric w\ndim=2; coords=t,y\ng[t,t]=exp(\nend\n", "curvature", "line 2, column"),
    ("space = pullback(flat(2, split=False), hyperbolic(2))\n", "embed", "MismatchedSplit"),
    ("space = hyperbolic(2)\n", "bilipschitz", "pullback"),
    ("lambda = 0\n", "stretch", "lambda"),
    ("space = banana(2)\n", "curvature", "banana"),
    ("seed = x\n", "curvature", "seed"),
    ("distance_method = magic\n", "bilipschitz", "magic"),
])
def test_configuration_errors_exit_2(tmp_path, capsys, text, command, fragment):
    cfg = write_cfg(tmp_path, text)
    code, out = run(tmp_path, command, "--config", cfg, "--samples", "5")
    assert code == 2
    assert fragment in capsys.readouterr().err
    assert not out.exists()


def test_missing_config_exits_2(tmp_path):
    assert main(["curvature", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_explicit_lambda_below_threshold_is_allowed(tmp_path):
    cfg = write_cfg(tmp_path, "lambda = 0.5\nconstant_samples = 100\n")
    code, out = run(tmp_path, "stretch", "--config", cfg, "--samples", "200")
    body = json.loads(out.read_text())
    assert code == 0
    assert body["result"]["lam"] == 0.5 and body["result"]["threshold"] > 0.5


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hyperrank", "rank", "--dims", "3,3"],
                         capture_output=True, text=True, cwd=tmp_path)
    assert res.returncode == 0 and res.stdout.strip() == "4"


def test_float_formatting():
    assert format_float(2.0) == "2.0"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(float("nan")) == "null"
    assert json.loads(dumps({"a": [1.0, 2.5], "b": None})) == {"a": [1.0, 2.5], "b": None}
