"""Command line behavior: formats, manifests, exit codes, reproducibility."""

import csv
import hashlib
import json
import os
import subprocess
import sys

import pytest

from ar1persist.cli import main
from ar1persist.spectral import CURVE_COLUMNS


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_orbit_stdout_json(capsys):
    code, out, err = run_cli(capsys, "orbit", "--a", "63/100")
    assert code == 0 and err == ""
    blob = json.loads(out)
    assert blob["orbit"]["kind"] == "finite"
    assert blob["orbit"]["points"] == ["0", "100/63", "3700/3969"]
    assert blob["hole"]["empty"] is False


def test_lambda_single_value(capsys):
    code, out, _ = run_cli(capsys, "lambda", "--a", "63/100", "--p", "1/2")
    assert code == 0
    blob = json.loads(out)
    assert abs(blob["solution"]["lambda"] - 0.7327856159383841) < 1e-12
    assert blob["bounds"]["upper_ok"] is True


def test_lambda_decimal_a_needs_inexact_flag(capsys):
    code, out, err = run_cli(capsys, "lambda", "--a", "0.63", "--p", "1/2")
    assert code == 2
    assert "--inexact" in err

    code, out, err = run_cli(capsys, "lambda", "--a", "0.63", "--inexact",
                             "--p", "1/2")
    assert code == 0
    blob = json.loads(out)
    assert abs(blob["solution"]["lambda"] - 0.7327856159383841) < 1e-12


def test_lambda_above_two_thirds_needs_experimental(capsys):
    code, _, err = run_cli(capsys, "lambda", "--a", "7/10", "--p", "1/2")
    assert code == 2 and "experimental" in err
    code, out, _ = run_cli(capsys, "lambda", "--a", "7/10", "--p", "1/2",
                           "--experimental")
    assert code == 0
    assert json.loads(out)["solution"]["lambda"] > 0.5


def test_lambda_grid_csv_and_manifest(tmp_path, capsys):
    out_file = tmp_path / "curve.csv"
    code, _, _ = run_cli(capsys, "lambda", "--a-grid", "101/200:2/3:9",
                         "--p", "1/2", "--out", str(out_file))
    assert code == 0
    with open(out_file, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CURVE_COLUMNS
    assert len(rows) == 10
    assert rows[-1][0] == "2/3"
    assert abs(float(rows[-1][1]) - 0.75) < 1e-12

    manifest = json.loads((tmp_path / "curve.csv.manifest.json").read_text())
    digest = hashlib.sha256(out_file.read_bytes()).hexdigest()
    assert manifest["sha256"] == digest
    assert manifest["tool"] == "ar1persist"


def test_cdf_uniform_values(capsys):
    code, out, _ = run_cli(capsys, "cdf", "--a", "2/3", "--p", "1/2",
                           "--grid", "0:3:4")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["z", "cdf", "survival", "tail_bound"]
    zs = [float(r[0]) for r in rows[1:]]
    cdfs = [float(r[1]) for r in rows[1:]]
    assert zs == [0.0, 1.0, 2.0, 3.0]
    for z, c in zip(zs, cdfs):
        assert abs(c - z / 3.0) < 1e-10


def test_lumped_writes_matrix_and_labels(tmp_path, capsys):
    out_file = tmp_path / "matrix.csv"
    code, _, _ = run_cli(capsys, "lumped", "--a", "63/100", "--p", "1/2",
                         "--out", str(out_file))
    assert code == 0
    with open(out_file, newline="") as fh:
        rows = list(csv.reader(fh))
    values = [[float(x) for x in row] for row in rows[1:]]
    assert values == [[1.0, 0.0, 0.0, 0.0], [0.5, 0.0, 0.0, 0.5],
                      [0.0, 0.5, 0.5, 0.0], [0.5, 0.0, 0.5, 0.0]]
    labels = json.loads((tmp_path / "matrix.labels.json").read_text())
    assert labels["dim"] == 4
    assert labels["labels"]["0"] == "dead"
    assert labels["exact_entries"][1] == ["1/2", "0", "0", "1/2"]
    assert (tmp_path / "matrix.csv.manifest.json").exists()
    assert (tmp_path / "matrix.labels.json.manifest.json").exists()


def test_validate_reports_three_way_agreement(capsys):
    code, out, _ = run_cli(capsys, "validate", "--a", "63/100", "--p", "1/2",
                           "--n", "16", "--reps", "80000", "--seed", "9")
    assert code == 0
    blob = json.loads(out)
    assert blob["agreement"]["solver_matrix_ok"] is True
    assert blob["agreement"]["mc_rate_ok"] is True
    assert blob["agreement"]["mc_persistence_ok"] is True
    assert blob["matrix"]["persistence_exact"] is not None


def test_validate_skips_matrix_for_aperiodic_orbit(capsys):
    code, out, _ = run_cli(capsys, "validate", "--a", "2/3", "--p", "1/2",
                           "--n", "12", "--reps", "60000", "--seed", "4")
    assert code == 0
    blob = json.loads(out)
    assert "skipped" in blob["matrix"]
    assert blob["agreement"]["mc_rate_ok"] is True


def test_validate_degenerate_simulation_exits_three(capsys):
    code, _, err = run_cli(capsys, "validate", "--a", "3/5", "--p", "1/2",
                           "--n", "300", "--reps", "40", "--seed", "1")
    assert code == 3
    assert "numeric failure" in err


def test_report_directory_with_figures(tmp_path, capsys):
    out_dir = tmp_path / "rep"
    code, out, _ = run_cli(capsys, "report", "--a", "63/100", "--p", "1/2",
                           "--out-dir", str(out_dir),
                           "--a-grid", "101/200:2/3:5",
                           "--n", "12", "--reps", "50000", "--seed", "2")
    assert code == 0
    expected = {"orbit.json", "solution.json", "curve.csv", "curve.png",
                "cdf.csv", "cdf.png", "harmonic.csv", "harmonic.png",
                "validate.json", "validation.png", "manifest.json"}
    assert set(os.listdir(out_dir)) == expected
    manifest = json.loads((out_dir / "manifest.json").read_text())
    for name, digest in manifest["files"].items():
        actual = hashlib.sha256((out_dir / name).read_bytes()).hexdigest()
        assert actual == digest, name
    assert (out_dir / "curve.png").stat().st_size > 1000


def test_rerun_is_byte_identical(tmp_path, capsys):
    out_file = tmp_path / "v.json"
    args = ("validate", "--a", "63/100", "--p", "1/2", "--n", "10",
            "--reps", "40000", "--seed", "6", "--out", str(out_file))
    assert run_cli(capsys, *args)[0] == 0
    first = out_file.read_bytes()
    first_manifest = (tmp_path / "v.json.manifest.json").read_bytes()
    assert run_cli(capsys, *args)[0] == 0
    assert out_file.read_bytes() == first
    assert (tmp_path / "v.json.manifest.json").read_bytes() == first_manifest


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "ar1persist.cli",
                           "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "ar1persist" in proc.stdout
