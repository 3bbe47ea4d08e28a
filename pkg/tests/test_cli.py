import io
import json
import sys

import pytest

from gr1kit import cli
from gr1kit.speclang import parse_spec

REDUCED_ARGS = ["--param", "n=2", "--param", "bl_max=10",
                "--param", "delta_units=5", "--param", "bl_upper=9",
                "--param", "k_move=1", "--param", "k_drop=2"]


def run_cli(argv):
    return cli.main(argv)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = root / "reduced.spec"
    assert run_cli(["emit", "--out", str(spec),
                    *REDUCED_ARGS, "--param", "bl_init=5"]) == 0
    strat = root / "reduced.strategy.json"
    assert run_cli(["synth", str(spec), "--out", str(strat)]) == 0
    return root, spec, strat


def test_emit_defaults_parse(tmp_path, capsys):
    assert run_cli(["emit"]) == 0
    text = capsys.readouterr().out
    doc = parse_spec(text)
    assert [d.name for d in doc.vars][:2] == ["bl", "s"]


def test_emit_n1_has_no_obstacles(capsys):
    assert run_cli(["emit", "--param", "n=1", "--param", "delta_units=10",
                    "--param", "bl_upper=20", "--param", "bl_init=12"]) == 0
    doc = parse_spec(capsys.readouterr().out)
    assert not any(d.name.startswith("o") for d in doc.vars)


def test_emit_rejects_unknown_param(capsys):
    assert run_cli(["emit", "--param", "bogus=3"]) == 2


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "params.cfg"
    cfg.write_text("n = 2\nbl_init = 4   # comment\n")
    assert run_cli(["emit", "--config", str(cfg),
                    "--param", "bl_init=7"]) == 0
    text = capsys.readouterr().out
    assert "bl = 7" in text and "rs : 0..2" in text


def test_synth_realizable_exit0(workdir):
    root, spec, strat = workdir
    obj = json.loads(strat.read_text())
    assert obj["goals"] == 1 and obj["nodes"]


def test_synth_unrealizable_exit10(tmp_path, capsys):
    spec = tmp_path / "low.spec"
    assert run_cli(["emit", "--out", str(spec),
                    *REDUCED_ARGS, "--param", "bl_init=1"]) == 0
    assert run_cli(["synth", str(spec)]) == 10
    spec0 = tmp_path / "zero.spec"
    assert run_cli(["emit", "--out", str(spec0),
                    *REDUCED_ARGS, "--param", "bl_init=0"]) == 0
    assert run_cli(["synth", str(spec0)]) == 10


def test_synth_parse_error_exit2(tmp_path, capsys):
    bad = tmp_path / "bad.spec"
    bad.write_text("[ENV_VARS]\nbl bl bl\n")
    assert run_cli(["synth", str(bad)]) == 2


def test_synth_capacity_exit5(tmp_path, capsys):
    spec = tmp_path / "big.spec"
    assert run_cli(["emit", "--out", str(spec)]) == 0
    assert run_cli(["synth", str(spec), "--cap", "1000"]) == 5


def test_simulate_deterministic_csv(workdir, tmp_path):
    root, spec, strat = workdir
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        assert run_cli(["simulate", str(strat), "--steps", "60",
                        "--seed", "9", "--out", str(out)]) == 0
    assert out1.read_text() == out2.read_text()
    header = out1.read_text().splitlines()[0]
    assert header == "step,time_s,RS,BL,HF,tries,S,O1,mode,ACT,human_away"


def test_simulate_batch_runs(workdir, tmp_path):
    root, spec, strat = workdir
    out = tmp_path / "batch.csv"
    assert run_cli(["simulate", str(strat), "--steps", "20", "--seed", "5",
                    "--runs", "3", "--out", str(out)]) == 0
    batch = [(tmp_path / f"batch.csv.{k:03d}").read_text() for k in range(3)]
    assert len(set(batch)) == 3            # distinct derived seeds
    single = tmp_path / "one.csv"
    assert run_cli(["simulate", str(strat), "--steps", "20", "--seed", "6",
                    "--out", str(single)]) == 0
    assert batch[1] == single.read_text()  # run k uses seed base+k
    assert run_cli(["simulate", str(strat), "--runs", "2"]) == 2


def test_simulate_scripted_events(workdir, tmp_path, capsys):
    root, spec, strat = workdir
    events = tmp_path / "ev.txt"
    events.write_text("step=5 human_away=1 duration=3\n")
    out = tmp_path / "t.csv"
    assert run_cli(["simulate", str(strat), "--steps", "20", "--seed", "1",
                    "--adversary", "scripted", "--events", str(events),
                    "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    frozen = [r for r in rows if r.endswith(",1")]
    assert len(frozen) == 3


def test_simulate_hole_exit3(workdir, tmp_path):
    root, spec, strat = workdir
    obj = json.loads(strat.read_text())
    for node in obj["nodes"]:
        node["edges"] = []
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(obj))
    assert run_cli(["simulate", str(broken), "--steps", "5"]) == 3


def test_simulate_interactive_mode(workdir, tmp_path, monkeypatch, capsys):
    root, spec, strat = workdir
    monkeypatch.setattr(sys, "stdin", io.StringIO("0\n" * 10))
    out = tmp_path / "i.csv"
    assert run_cli(["simulate", str(strat), "--adversary", "interactive",
                    "--steps", "3", "--out", str(out)]) == 0
    assert "environment move" in capsys.readouterr().out
    assert len(out.read_text().splitlines()) == 5


def test_check_safety_pass_and_fail(workdir, tmp_path, capsys):
    root, spec, strat = workdir
    trace = tmp_path / "t.csv"
    assert run_cli(["simulate", str(strat), "--steps", "40", "--seed", "3",
                    "--out", str(trace)]) == 0
    assert run_cli(["check", "--spec", str(spec), "--mode", "safety",
                    "--trace", str(trace)]) == 0
    lines = trace.read_text().splitlines()
    parts = lines[20].split(",")
    parts[3] = "0"    # force the backlog to zero mid-trace
    lines[20] = ",".join(parts)
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines) + "\n")
    assert run_cli(["check", "--spec", str(spec), "--mode", "safety",
                    "--trace", str(bad)]) == 4


def test_check_recurrence(workdir, tmp_path, capsys):
    root, spec, strat = workdir
    trace = tmp_path / "t.csv"
    assert run_cli(["simulate", str(strat), "--steps", "120", "--seed", "3",
                    "--adversary", "min-bl", "--out", str(trace)]) == 0
    assert run_cli(["check", "--spec", str(spec), "--mode", "lasso",
                    "--strategy", str(strat), "--adversary", "min-bl"]) == 0
    gap = None
    out = capsys.readouterr().out
    for line in out.splitlines():
        if "max goal gap" in line:
            gap = int(line.split(":")[1])
    assert gap is not None
    assert run_cli(["check", "--spec", str(spec), "--mode", "recurrence",
                    "--trace", str(trace), "--window", str(gap)]) == 0
    assert run_cli(["check", "--spec", str(spec), "--mode", "recurrence",
                    "--trace", str(trace), "--window", "1"]) == 4


def test_check_json_output(workdir, capsys):
    root, spec, strat = workdir
    assert run_cli(["check", "--spec", str(spec), "--mode", "lasso",
                    "--strategy", str(strat), "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["passed"] is True and obj["max_goal_gap"] >= 1


def test_check_closure(workdir, tmp_path, capsys):
    root, spec, strat = workdir
    assert run_cli(["check", "--spec", str(spec), "--mode", "closure",
                    "--strategy", str(strat)]) == 0
    obj = json.loads(strat.read_text())
    obj["nodes"][0]["edges"] = obj["nodes"][0]["edges"][:1]
    broken = tmp_path / "hole.json"
    broken.write_text(json.dumps(obj))
    assert run_cli(["check", "--spec", str(spec), "--mode", "closure",
                    "--strategy", str(broken)]) == 4


def test_oracle_random_corpus(capsys):
    assert run_cli(["oracle", "--random", "10", "--seed", "0"]) == 0
    assert "0 mismatches" in capsys.readouterr().out


def test_oracle_spec_instance(workdir, capsys):
    root, spec, strat = workdir
    assert run_cli(["oracle", "--spec", str(spec)]) == 0
    assert "agreement" in capsys.readouterr().out


def test_oracle_capacity_exit5(tmp_path, capsys):
    spec = tmp_path / "big.spec"
    assert run_cli(["emit", "--out", str(spec)]) == 0
    assert run_cli(["oracle", "--spec", str(spec)]) == 5
