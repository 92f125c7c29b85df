import csv
import io
import json
import os
import subprocess
import sys

import jsonschema
import pytest

from santalo_lab import __version__, cli

SMALL = ["--dim", "80", "--samples", "8000", "--grid-points", "16", "--quiet"]


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr().out
    return code, out


def run_process(args, threads=None):
    env = dict(os.environ)
    if threads is not None:
        env["SANTALO_LAB_THREADS"] = str(threads)
    return subprocess.run([sys.executable, "-m", "santalo_lab.cli", *args], capture_output=True, text=True, env=env)


def test_centroid_hull_limit_gap(capsys):
    code, out = run(["centroid-hull", "--dim", "2000", "--quiet"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["limit_gap"] < 0.01
    assert rep["version"] == __version__


def test_config_defaults_are_embedded(capsys):
    _, out = run(["ball-volume", "--quiet"], capsys)
    cfg = json.loads(out)["config"]
    assert cfg["dim"] == 200 and cfg["samples"] == 100_000 and cfg["grid_points"] == 64
    assert cfg["seed"] == 20240001 and cfg["gamma"] == 0.05 and cfg["a"] == 1.0
    assert cfg["b"] == pytest.approx(0.5819767068693265)
    assert cfg["output_format"] == "json" and cfg["output_path"] is None


def test_reproduce_report_is_valid_and_deterministic(capsys):
    args = ["reproduce", *SMALL, "--seed", "7"]
    code1, first = run(args, capsys)
    code2, second = run(args, capsys)
    assert code1 == code2 == 0
    assert first == second
    rep = json.loads(first)
    jsonschema.validate(rep, cli.load_schema())
    assert round(rep["constants"]["s0"], 6) == -0.290815
    assert rep["constants"]["target_lo"] == 0.142673
    names = [c["name"] for c in rep["checks"]]
    assert "polar_chord_ratio_in_target" in names and "window_mass" in names


def test_reports_do_not_depend_on_worker_count():
    args = ["sections", "--dim", "40", "--samples", "30000", "--grid-points", "5", "--seed", "3", "--quiet"]
    one = run_process(args, threads=1)
    many = run_process(args, threads=4)
    assert one.returncode == many.returncode == 0
    assert one.stdout == many.stdout


def test_progress_goes_to_stderr():
    res = run_process(["sections", "--dim", "20", "--samples", "2000", "--grid-points", "3"])
    assert res.returncode == 0
    assert "section 3/3 done" in res.stderr
    json.loads(res.stdout)


def test_csv_output(capsys, tmp_path):
    path = tmp_path / "out.csv"
    code, out = run(["mixed-volume", "--dim", "2", "--t", "1", "--format", "csv", "--out", str(path), "--quiet"], capsys)
    assert code == 0 and out == ""
    rows = list(csv.reader(io.StringIO(path.read_text())))
    assert rows[0] == ["key", "value"]
    table = dict(rows[1:])
    assert table["version"] == __version__
    assert float(table["log_mixed_volumes.1"]) == pytest.approx(1.3862943611198906)
    assert table["config.output_path"] == str(path)


def test_usage_errors_exit_two():
    assert run_process(["ball-volume", "--dim", "0"]).returncode == 2
    assert run_process(["nonsense"]).returncode == 2
    assert run_process(["reproduce", "--format", "xml"]).returncode == 2


def test_numeric_failure_exits_one(capsys):
    code, out = run(["polar-centroid", "--dim", "10", "--samples", "1000", "--grid-points", "16", "--quiet"], capsys)
    rep = json.loads(out)
    assert code == 1
    assert rep["error"] == "DiagnosticsError"
    assert rep["config"]["dim"] == 10


def test_other_commands_run(capsys):
    for args in (
        ["ball-volume", "--p", "inf", "--dim", "5"],
        ["intersect", "--dim", "2", "--s", "1.2", "--samples", "5000"],
        ["santalo", "--body", "half-ball", "--dim", "2"],
        ["santalo", "--body", "half-ball", "--dim", "2", "--grid", "--tolerance", "1e-3"],
        ["half-ball", "--dims", "4", "16"],
        ["polar-centroid", *SMALL[:-1], "--recenter"],
    ):
        code, out = run([*args, "--quiet"], capsys)
        assert code == 0, args
        assert json.loads(out)["command"] == args[0]
