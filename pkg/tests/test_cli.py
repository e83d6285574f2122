import json

import pytest

from vdfcommittee.harness.cli import main

PASSING = """
protocol = "split_world_demo"
n = 60
f = 19
trials = 3

[thresholds]
speaker_threshold = 0.05

[assertions]
min_split_rate = 1.0
"""


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert "schedule-feasibility-sweep" in out and "split-world-impossibility" in out


def test_solve_schedule(capsys):
    assert main(["solve-schedule", "--delta-h", "1", "--delta-h-slow", "1", "--delta-adv", "0.5", "--delta-net", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["feasibility_bound"] == pytest.approx(1.0125)
    assert out["d_m"] > out["d_v"] > out["d_p"] > out["d_c"]


def test_infeasible_schedule_exit_2(capsys):
    rc = main(["solve-schedule", "--delta-h", "1", "--delta-h-slow", "1.2", "--delta-adv", "0.5", "--delta-net", "1"])
    assert rc == 2
    assert "feasibility bound" in capsys.readouterr().err


def test_bad_flags_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["run"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["run", "x", "--format", "xml"])
    assert err.value.code == 2


def test_unknown_scenario_exit_2(capsys):
    assert main(["run", "no-such-scenario"]) == 2
    assert "available" in capsys.readouterr().err


def test_run_config_pass_and_fail(tmp_path, capsys):
    cfg = tmp_path / "split.toml"
    cfg.write_text(PASSING)
    out = tmp_path / "report.jsonl"
    assert main(["run", str(cfg), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4
    summary = json.loads(capsys.readouterr().out)
    assert summary["split"]["attack_successes"] == 3

    failing = tmp_path / "fail.toml"
    failing.write_text(PASSING.replace("min_split_rate = 1.0", "min_split_rate = 1.0\nmax_safety_violations = 0"))
    assert main(["run", str(failing), "--format", "csv", "--out", str(tmp_path / "r.csv")]) == 1
    assert "ASSERTION FAILED" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('protocol = "consensus_vdf"\nn = 10\nf = 4\n')
    assert main(["run", str(bad)]) == 2


def test_zero_trials(tmp_path, capsys):
    cfg = tmp_path / "z.toml"
    cfg.write_text(PASSING)
    assert main(["run", str(cfg), "--trials", "0", "--out", str(tmp_path / "z.jsonl")]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["z"]["no_data"] is True
    assert "report not written" in captured.err
