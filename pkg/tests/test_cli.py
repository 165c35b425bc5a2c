import json
import subprocess
import sys

import pytest

from lbsim.cli import main
from lbsim.report import read_trace_csv


def _final_vector(path):
    rows = read_trace_csv(path)
    last = max(r.step for r in rows)
    return tuple(r.level for r in rows if r.step == last)


def test_all_policies_write_distinct_traces(tmp_path):
    out = tmp_path / "out"
    assert main(["--policy", "all", "--out", str(out)]) == 0
    finals = {p: _final_vector(out / f"trace_{p}.csv") for p in ("proposed", "random", "round-robin")}
    assert len(set(finals.values())) == 3
    for p in finals:
        doc = json.loads((out / f"metrics_{p}.json").read_text())
        assert doc["policy"] == p and set(doc["servers"]) == {"1", "2", "3", "4"}
        assert (out / "plots" / p / "server1_cpu.csv").read_text().startswith("actual,predicted\n")
    assert "cost.bw_per_rate" in (out / "config.txt").read_text()


def test_rerun_is_byte_identical(tmp_path):
    args = ["--policy", "random", "--seed", "7", "--set", "engine.use_forecast=false"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "trace_random.csv").read_bytes()
    b = (tmp_path / "b" / "trace_random.csv").read_bytes()
    assert a == b


def test_unwritable_output_fails(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["--policy", "round-robin", "--out", str(blocker / "sub")]) != 0


def test_env_overrides_out(tmp_path, monkeypatch):
    monkeypatch.setenv("LBSIM_OUT", str(tmp_path / "env"))
    assert main(["--policy", "round-robin", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "env" / "trace_round-robin.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_bad_policy_exit_code(caplog, tmp_path):
    assert main(["--policy", "foo", "--out", str(tmp_path)]) == 2
    assert "round-robin" in caplog.text


def test_module_entry_point_reports_on_stderr(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "lbsim", "--policy", "foo", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "valid values" in proc.stderr


def test_override_logged_and_reported(tmp_path, caplog):
    out = tmp_path / "o"
    caplog.set_level("INFO")
    args = ["--policy", "round-robin", "--out", str(out), "--set", "lstm.hidden_units=64", "--set", "lstm.epochs=1"]
    assert main(args) == 0
    assert "lstm.hidden_units = 64" in caplog.text
    doc = json.loads((out / "metrics_round-robin.json").read_text())
    assert doc["config"]["lstm.hidden_units"] == 64


def test_config_file_flag(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"policy = round-robin\nout = {tmp_path / 'c'}\n")
    assert main(["--config", str(cfg)]) == 0
    assert (tmp_path / "c" / "trace_round-robin.csv").exists()


def test_rules_subcommand(tmp_path, capsys):
    assert main(["rules"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 82 and lines[-1].endswith("\tover")
    target = tmp_path / "rules.tsv"
    assert main(["rules", "--out", str(target)]) == 0
    assert len(target.read_text().splitlines()) == 82
