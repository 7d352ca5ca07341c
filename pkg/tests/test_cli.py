"""
Tests for the btrv command line
"""

import json

from btrv.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main


def scenario(data_dir, name):
    return str(data_dir / "scenarios" / name)


def test_tree_prints_the_mission(capsys):
    assert main(["tree"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("tree Mission\n? Root {")
    assert "condition BatteryLevelAbove30 uses BatteryLevel" in out


def test_unknown_tree_is_a_usage_error(capsys):
    assert main(["tree", "no_such_tree"]) == EXIT_USAGE
    assert "unknown tree" in capsys.readouterr().err


def test_bad_arguments():
    assert main([]) == EXIT_USAGE
    assert main(["run", "--seed", "many"]) == EXIT_USAGE


def test_run_nominal_prefix(data_dir, capsys):
    assert main(["run", scenario(data_dir, "default.json"), "--horizon", "300"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("Scenario nominal (seed 7, horizon 300): horizon after 300 steps")
    assert "phi1: no violation" in out


def test_run_reports_violation(data_dir, capsys):
    code = main(["run", scenario(data_dir, "experiment1.json"), "--stop-on-violation", "--report", "machine"])
    assert code == EXIT_VIOLATION
    captured = capsys.readouterr()
    report = json.loads(captured.out)
    assert report["scenario"] == "experiment1"
    assert report["status"] == "violation"
    verdicts = {v["name"]: v for v in report["verdicts"]}
    assert verdicts["phi1"]["status"] == "violated"
    assert verdicts["phi1"]["tick"] == 5
    assert verdicts["phi2"]["status"] == "running"
    assert report["issues"]["monitor_violation"] == 1
    records = [json.loads(line)["violation"] for line in captured.err.splitlines() if line.startswith('{"violation"')]
    assert len(records) == 1
    assert records[0]["monitor"] == "Monitor.phi1"
    assert records[0]["tick"] == 5
    assert records[0]["channel"] == "BatteryReader->BatteryLevel"
    assert records[0]["message"][0] == "<ok>"


def test_run_then_check_trace(data_dir, tmp_path, capsys):
    trace = tmp_path / "exp1.trace"
    assert main(["run", scenario(data_dir, "experiment1.json"), "--horizon", "600",
                 "--trace-out", str(trace)]) == EXIT_VIOLATION
    assert trace.exists()
    capsys.readouterr()

    properties = str(data_dir / "properties" / "robot.scope")
    assert main(["check", str(trace), properties]) == EXIT_VIOLATION
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("phi1: false (earliest violation at position ")
    assert lines[1] == "phi2: inconclusive"

    assert main(["check", str(trace), properties, "--closed", "--report", "machine"]) == EXIT_VIOLATION
    results = json.loads(capsys.readouterr().out)
    assert [r["property"] for r in results] == ["phi1", "phi2"]
    assert results[0]["verdict"] == "false"
    assert results[1]["verdict"] == "true"


def test_check_rejects_malformed_trace(data_dir, tmp_path, capsys):
    trace = tmp_path / "bad.trace"
    trace.write_text("garbage\n", encoding="utf-8")
    assert main(["check", str(trace), str(data_dir / "properties" / "robot.scope")]) == EXIT_USAGE
    assert capsys.readouterr().err.strip().endswith("invalid JSON: Expecting value")


def test_synth_writes_monitors(data_dir, tmp_path):
    out_dir = tmp_path / "monitors"
    assert main(["synth", str(data_dir / "properties" / "robot.scope"), "--out-dir", str(out_dir),
                 "--dot", "--theta", "20"]) == EXIT_OK
    phi2 = (out_dir / "phi2.pg").read_text(encoding="utf-8")
    assert phi2.startswith("monitor Monitor.phi2")
    assert "timer := 20" in phi2
    assert (out_dir / "phi1.pg").exists()
    assert (out_dir / "phi1.dot").read_text(encoding="utf-8").startswith("digraph")


def test_synth_reports_non_monitorable(tmp_path, capsys):
    properties = tmp_path / "p.scope"
    properties.write_text("good: always not (A, B, m[1] = 1);\nbad: eventually (A, B, m[1] = 1);\n",
                          encoding="utf-8")
    assert main(["synth", str(properties)]) == EXIT_VIOLATION
    captured = capsys.readouterr()
    assert "monitor Monitor.good" in captured.out
    assert "bad: " in captured.err


def test_run_rejects_non_monitorable_properties(tmp_path, capsys):
    properties = tmp_path / "p.scope"
    properties.write_text("late: eventually (Localization, AtDestination, m[1] = <ok>);\n", encoding="utf-8")
    assert main(["run", "--properties", str(properties), "--horizon", "10"]) == EXIT_USAGE
    assert "late:" in capsys.readouterr().err


def test_invalid_override(capsys):
    assert main(["run", "--seed", "-1"]) == EXIT_USAGE
    assert "invalid command-line override" in capsys.readouterr().err


def test_property_syntax_error(tmp_path):
    properties = tmp_path / "p.scope"
    properties.write_text("broken: always (;\n", encoding="utf-8")
    assert main(["synth", str(properties)]) == EXIT_USAGE


def test_run_history(data_dir, tmp_path, capsys):
    url = f"sqlite:///{tmp_path / 'history.db'}"
    assert main(["run", scenario(data_dir, "experiment1.json"), "--stop-on-violation",
                 "--history-db", url]) == EXIT_VIOLATION

    from database import RunHistory

    history = RunHistory(url)
    violations = history.violations()
    assert [v["monitor"] for v in violations] == ["phi1"]
    assert violations[0]["scenario"] == "experiment1"
    summary = history.run_summary(violations[0]["session_id"])
    assert summary["status"] == "violation"
    assert summary["monitors_attached"] == 2
    assert summary["violations_found"] == 1


def test_undecodable_inputs_are_usage_errors(data_dir, tmp_path, capsys):
    properties = str(data_dir / "properties" / "robot.scope")
    binary = tmp_path / "binary.trace"
    binary.write_bytes(b"\xff\xfe\x00\x81")
    assert main(["check", str(binary), properties]) == EXIT_USAGE
    assert "UTF-8" in capsys.readouterr().err

    trace = tmp_path / "exp1.trace"
    assert main(["run", scenario(data_dir, "experiment1.json"), "--stop-on-violation",
                 "--trace-out", str(trace)]) == EXIT_VIOLATION
    capsys.readouterr()
    assert main(["check", str(trace), str(binary)]) == EXIT_USAGE
    assert "UTF-8" in capsys.readouterr().err

    config = tmp_path / "binary.json"
    config.write_bytes(b"\xff\xfe{}")
    assert main(["run", str(config)]) == EXIT_USAGE
    assert main(["run", "--properties", str(binary), "--horizon", "10"]) == EXIT_USAGE
