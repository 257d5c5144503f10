import json
import subprocess
import sys

import pytest

from babenko_solitary.cli import run


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_solve_writes_profile_sidecar_and_manifest(workdir):
    assert run(["solve", "--epsilon", "0.05", "--L", "400", "--n", "8192", "--out", "profile.csv"]) == 0
    assert (workdir / "profile.csv").exists()
    meta = json.loads((workdir / "profile.json").read_text())
    assert meta["epsilon"] == 0.05 and meta["sign_ok"] is True
    manifest = json.loads((workdir / "profile.manifest.json").read_text())
    assert manifest["truncation_floor"] == pytest.approx(1.5236e-4, rel=1e-3)
    assert manifest["config"]["seed"] == 0
    assert manifest["solver_options"]["fp_tolerance"] == 1e-11
    assert "identity_suite" in manifest["tolerances"]
    assert manifest["criticality"] > 0


def test_solve_with_explicit_parameters(workdir):
    assert run(["solve", "--g", "1", "--gamma", "-1", "--c", "1.02", "--n", "2048", "--out", "p.csv"]) == 0
    meta = json.loads((workdir / "p.json").read_text())
    assert meta["epsilon"] == pytest.approx(0.02)


@pytest.mark.parametrize("argv", [
    ["solve", "--epsilon", "0.05", "--c", "1.1"],
    ["solve", "--g", "1", "--gamma", "-1"],
    ["solve", "--epsilon", "0.05", "--bogus"],
    ["solve", "--epsilon", "0.05", "--n", "1000"],
    ["continue", "--from-epsilon", "0.02"],
    ["continue", "--from-epsilon", "0.02", "--to-epsilon", "0.1", "--to-c", "1.1"],
    ["expand", "--epsilon", "0.05", "--fit-max", "150"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(workdir, argv):
    assert run(argv) == 2


def test_diagnostic_failures_exit_1(workdir):
    assert run(["solve", "--g", "1", "--gamma", "-1", "--c", "0.9", "--n", "1024"]) == 1
    assert run(["solve", "--epsilon", "0.05", "--n", "1024", "--max-iter", "2"]) == 1
    manifest = json.loads((workdir / "profile.manifest.json").read_text())
    assert manifest["status"].startswith("failed")


def test_spectrum_command(workdir):
    assert run(["spectrum", "--epsilon", "0", "--modes", "1024", "--basis", "full", "--out", "s.json"]) == 0
    data = json.loads((workdir / "s.json").read_text())
    assert set(data) == {"kind", "modes", "eigenvalues", "lambda_min_nontrivial", "continuous_edge", "height_margin"}
    assert data["lambda_min_nontrivial"] == pytest.approx(-0.618, abs=5e-3)


def test_expand_command(workdir):
    assert run(["expand", "--epsilon", "0.05", "--order", "2", "--out", "e.json"]) == 0
    data = json.loads((workdir / "e.json").read_text())
    assert {"epsilon", "N", "a", "remainder_sups", "condition_number"} <= set(data)
    assert data["N"] == 2 and len(data["a"]) == 2
    assert data["closure"][0]["r"] == [{"power": 1, "numerator": -1, "denominator": 1},
                                       {"power": 2, "numerator": 1, "denominator": 2}]


def test_continue_command(workdir):
    argv = ["continue", "--g", "1", "--gamma", "-1", "--from-epsilon", "0.02", "--to-epsilon", "0.025",
            "--n", "2048", "--modes", "256", "--out", "b.json"]
    assert run(argv) == 0
    data = json.loads((workdir / "b.json").read_text())
    assert data["stop_reason"] == "reached_target"
    assert data["points"][-1]["epsilon"] == pytest.approx(0.025)
    assert (workdir / "b.csv").read_text().startswith("c,sup_U,lambda_min,height_margin")


def test_verify_is_deterministic(workdir):
    assert run(["verify", "--manifest", "a.json"]) == 0
    assert run(["verify", "--manifest", "b.json"]) == 0
    a, b = (workdir / "a.json").read_bytes(), (workdir / "b.json").read_bytes()
    assert json.loads(a)["config"].pop("manifest") == "a.json"
    assert a.replace(b"a.json", b"b.json") == b


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "babenko_solitary", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "verify" in out.stdout
