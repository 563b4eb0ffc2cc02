import csv
import json
import subprocess
import sys

import pytest

from skyplanner.cli import build_parser, emit_plot_data, main, resolve_config
from skyplanner.config import apply_overrides, default_config, load_config
from skyplanner.errors import InfeasibleTripError, InvalidParameterError
from skyplanner.harness import CSV_HEADER, TrialRecord


def _rec(t, obj="max-data", T=100.0, M=150.0):
    return TrialRecord(t, obj, 2, 2, T, M, 1.0, M / T, 1, True, True)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture
def base_json(tmp_path):
    path = tmp_path / "base.json"
    path.write_text(json.dumps({"experiment": {"trials": 3, "seed": 11}}))
    return path


# (flag, cli value, config-file value, config block, config key)
MATRIX = [
    ("--seed", "5", 6, "experiment", "seed"),
    ("--trials", "7", 8, "experiment", "trials"),
    ("--sd-distance", "3000", 4000.0, "scene", "sd_distance"),
    ("--n1", "1", 3, "experiment", "n1"),
    ("--n2", "0", 1, "experiment", "n2"),
    ("--battery-wh", "150", 120.0, "power", "battery_wh"),
]


@pytest.mark.parametrize("flag,cli_val,file_val,block,key", MATRIX)
@pytest.mark.parametrize("use_file", [False, True])
@pytest.mark.parametrize("use_flag", [False, True])
def test_override_precedence(tmp_path, flag, cli_val, file_val, block, key, use_file, use_flag):
    argv = ["simulate"]
    if use_file:
        path = tmp_path / "c.json"
        path.write_text(json.dumps({block: {key: file_val}}))
        argv += ["--config", str(path)]
    if use_flag:
        argv += [flag, cli_val]
    cfg = resolve_config(build_parser().parse_args(argv))
    default = default_config()[block][key]
    expect = type(default)(cli_val) if use_flag else (file_val if use_file else default)
    assert cfg[block][key] == expect
    # untouched keys keep their defaults
    assert cfg["channel"] == default_config()["channel"]


def test_objective_override():
    cfg = apply_overrides(default_config(), objective="min-time")
    assert cfg["experiment"]["objectives"] == ["min-time"]
    assert apply_overrides(default_config(), objective="both")["experiment"]["objectives"] == ["min-time", "max-data"]


def test_bad_config_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidParameterError):
        load_config(bad)
    bad.write_text(json.dumps({"weather": {}}))
    with pytest.raises(InvalidParameterError):
        load_config(bad)
    with pytest.raises(InvalidParameterError):
        load_config(tmp_path / "missing.json")


def test_simulate_writes_files(tmp_path, base_json):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(base_json), "--out-dir", str(out), "--workers", "1"]) == 0
    rows = _rows(out / "trials.csv")
    assert ",".join(rows[0]) == CSV_HEADER and len(rows) == 1 + 3 * 2
    summary = json.loads((out / "summary.json").read_text())
    assert "generated_at" in summary and summary["objectives"]["max-data"]["trials"] == 3
    hist = _rows(out / "hist_round_trip.csv")
    assert hist[0] == ["bin_lo", "bin_hi", "min-time", "max-data"] and len(hist) == 51
    assert sum(int(r[2]) for r in hist[1:]) == 3
    assert (out / "efficiency_trend.csv").exists() and (out / "hist_data.csv").exists()


def test_simulate_json_single_objective(tmp_path, base_json):
    out = tmp_path / "o"
    assert main(["simulate", "--config", str(base_json), "--trials", "2", "--objective", "min-time",
                 "--format", "json", "--out-dir", str(out), "--workers", "1"]) == 0
    recs = json.loads((out / "trials.json").read_text())
    assert len(recs) == 2 and {r["objective"] for r in recs} == {"min-time"}


def test_plan_trace(tmp_path, base_json):
    out = tmp_path / "p"
    assert main(["plan", "--config", str(base_json), "--seed", "3", "--objective", "max-data", "--trace",
                 "--out-dir", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["plan_max-data.json"]
    doc = json.loads((out / "plan_max-data.json").read_text())
    for key in ("scene", "route", "s", "tbs_points", "hover_points", "stage_data", "ledger"):
        assert key in doc


def test_sweep(tmp_path, base_json):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(base_json), "--trials", "2", "--axis", "sd_distance",
                 "--values", "3000,5000", "--out-dir", str(out), "--workers", "1"]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"summary_sd_distance_3000.json", "summary_sd_distance_5000.json", "efficiency_trend.csv"} <= names
    trend = _rows(out / "efficiency_trend.csv")
    assert len(trend) == 1 + 2 * 2 and trend[1][:3] == ["sd_distance", "3000.0", "max-data"]


@pytest.mark.parametrize("argv", [
    ["simulate", "--bogus"],
    ["teleport"],
    ["simulate", "--objective", "fastest"],
    ["sweep", "--axis", "sd_distance"],
    ["sweep", "--axis", "colour", "--values", "1"],
])
def test_usage_errors_exit_1(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [
    ["sweep", "--axis", "n1", "--values", "1.5"],
    ["sweep", "--axis", "sd_distance", "--values", "a,b"],
    ["simulate", "--workers", "0"],
    ["simulate", "--trials", "0"],
    ["simulate", "--battery-wh", "-5"],
])
def test_invalid_values_exit_1(tmp_path, extra):
    assert main([*extra, "--out-dir", str(tmp_path)]) == 1


def test_infeasible_exit_2(tmp_path, base_json):
    argv = ["--config", str(base_json), "--battery-wh", "5", "--out-dir", str(tmp_path), "--workers", "1"]
    assert main(["simulate", *argv]) == 2
    assert not (tmp_path / "trials.csv").exists()
    assert main(["plan", *argv]) == 2
    assert main(["sweep", *argv, "--axis", "n1", "--values", "1"]) == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "skyplanner.cli", "simulate", "--nope"], capture_output=True, text=True)
    assert res.returncode == 1 and "usage" in res.stderr


def test_histogram_conservation(tmp_path):
    recs = [_rec(t, T=100.0 + t, M=50.0 + (t * 37) % 101) for t in range(1000)]
    emit_plot_data({"max-data": recs}, tmp_path)
    for name in ("hist_round_trip.csv", "hist_data.csv"):
        rows = _rows(tmp_path / name)
        assert len(rows) == 51 and sum(int(r[2]) for r in rows[1:]) == 1000


def test_histogram_single_record(tmp_path):
    emit_plot_data({"max-data": [_rec(0)]}, tmp_path)
    counts = [int(r[2]) for r in _rows(tmp_path / "hist_round_trip.csv")[1:]]
    assert counts.count(1) == 1 and sum(counts) == 1


def test_histogram_two_series(tmp_path):
    emit_plot_data({"min-time": [_rec(0, "min-time", 90.0)], "max-data": [_rec(0, T=120.0)]}, tmp_path)
    rows = _rows(tmp_path / "hist_data.csv")
    assert rows[0] == ["bin_lo", "bin_hi", "min-time", "max-data"]
    assert sum(int(r[2]) for r in rows[1:]) == sum(int(r[3]) for r in rows[1:]) == 1


def test_histogram_needs_records(tmp_path):
    with pytest.raises(InfeasibleTripError):
        emit_plot_data({"max-data": [TrialRecord.infeasible(0, "max-data")]}, tmp_path)
