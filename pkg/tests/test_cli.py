import json
import math

import pytest

from chatter import output
from chatter.catalog import instantiate
from chatter.cli import main
from chatter.engine import simulate

from .conftest import bouncing_theta_inf


def run(tmp_path, *argv):
    return main([argv[0], "--out", str(tmp_path), *argv[1:]])


def read_report(tmp_path, name):
    return json.loads((tmp_path / f"{name}_report.json").read_text())


def test_simulate_example1(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--model", "example1") == 0
    rep = read_report(tmp_path, "example1")
    assert rep["schema"] == 1 and rep["verdict"] == "chattering"
    assert rep["termination"] == "zeno_detected"
    assert "chattering" in capsys.readouterr().out


def test_simulate_bouncing_ball_theta_inf(tmp_path):
    assert run(tmp_path, "simulate", "--model", "bouncing_ball") == 0
    rep = read_report(tmp_path, "bouncing_ball")
    assert rep["theta_inf_estimate"] == pytest.approx(bouncing_theta_inf(2.0, 0.5), abs=1e-6)
    assert rep["theta_inf_estimate"] == pytest.approx(1.9167, abs=1e-4)


def test_trace_and_report_agree(tmp_path):
    assert run(tmp_path, "simulate", "--model", "example1") == 0
    lines = (tmp_path / "example1_trace.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,segment,flag"
    rows = [line.split(",") for line in lines[1:]]
    times = [float(r[0]) for r in rows]
    assert times == sorted(times)
    impacts = [r for r in rows if r[4] == "impact"]
    assert len(impacts) == 2 * read_report(tmp_path, "example1")["n_impacts"]
    for pre, post in zip(impacts[::2], impacts[1::2]):
        assert pre[0] == post[0] and float(pre[2]) < 0 < float(post[2])
    assert {r[4] for r in rows} <= set(output.FLAGS)


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["simulate", "--model", "vibrating_table", "--out", str(d)]) == 0
    for name in ("vibrating_table_trace.csv", "vibrating_table_report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_four_state_trace_and_json_format(tmp_path):
    assert run(tmp_path, "simulate", "--model", "coupled_chatter", "--t_end", "3", "--format", "json") == 0
    doc = json.loads((tmp_path / "coupled_chatter_trace.json").read_text())
    assert doc["columns"] == ["t", "x1", "x2", "x3", "x4", "segment", "flag"]


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("model: bouncing_ball\nr: 0.2\nout_report: rep.json\n")
    assert run(tmp_path, "simulate", "--config", str(cfg), "--set", "x0=3") == 0
    rep = json.loads((tmp_path / "rep.json").read_text())
    assert rep["theta_inf_estimate"] == pytest.approx(bouncing_theta_inf(3.0, 0.2), abs=1e-6)


def test_truncated_run_via_impact_cap(tmp_path):
    assert run(tmp_path, "simulate", "--model", "bouncing_ball", "--impact-cap", "auto") == 0
    rep = read_report(tmp_path, "bouncing_ball")
    assert rep["n_impacts"] == 1 and rep["impact_cap"] == 2
    assert rep["sticks"][0]["reason"] == "truncation"


def test_check_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "check", "--model", "example1") == 0
    assert "6.28" in capsys.readouterr().out
    assert run(tmp_path, "check", "--model", "moon_holmes_autonomous") == 1
    doc = json.loads((tmp_path / "moon_holmes_autonomous_check.json").read_text())
    assert doc["certificate"]["m"] == pytest.approx(0.231, abs=1e-3)
    assert run(tmp_path, "check", "--model", "moon_holmes_autonomous", "--m", "0.331") == 0
    doc = json.loads((tmp_path / "moon_holmes_autonomous_check.json").read_text())
    assert doc["certificate"]["lhs"] == pytest.approx(2.91, abs=0.01)


def test_check_inline_field_needs_box(tmp_path):
    assert run(tmp_path, "check", "--field", "-9.8", "--r", "0.5", "--phi", "0.1") == 2
    assert run(tmp_path, "check", "--field", "-9.8", "--r", "0.5", "--phi", "0.1",
               "--box-h", "2", "--box-hbar", "7") == 0


def test_usage_and_runtime_errors(tmp_path, capsys):
    assert main(["simulate", "--bogus"]) == 2
    assert run(tmp_path, "simulate", "--model", "nope") == 2
    assert run(tmp_path, "simulate", "--model", "example1", "--r", "1.5") == 2
    # the field is fine at the start but fails once the bead reaches x < 1
    assert run(tmp_path, "simulate", "--field", "sqrt(x - 1) - 10", "--r", "0.5", "--x0", "2") == 3
    assert "error" in capsys.readouterr().err


def test_list_models(capsys):
    assert main(["list-models", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["models"]) == 7
    assert main(["list-models"]) == 0
    assert "pyragas_example1" in capsys.readouterr().out


def test_sweep_restitution(tmp_path):
    code = run(tmp_path, "sweep", "--model", "bouncing_ball", "--param", "r", "--values", "0.5", "0.2,0.1",
               "--workers", "2")
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("r,n_impacts,theta_inf_estimate")
    rows = [line.split(",") for line in lines[1:]]
    assert [float(r[0]) for r in rows] == [0.1, 0.2, 0.5]
    for r in rows:
        assert float(r[2]) == pytest.approx(bouncing_theta_inf(2.0, float(r[0])), abs=1e-6)
    assert (tmp_path / "bouncing_ball_r_0.5_report.json").exists()


def test_sweep_marks_failed_rows(tmp_path):
    code = run(tmp_path, "sweep", "--model", "bouncing_ball", "--param", "r", "--values", "0.5", "1.5")
    assert code == 3
    rows = (tmp_path / "sweep.csv").read_text().splitlines()[1:]
    assert rows[0].split(",")[-2] == "ok"
    assert "failed" in rows[1]


def test_sweep_errors(tmp_path):
    assert run(tmp_path, "sweep", "--model", "bouncing_ball", "--param", "r", "--values") == 2
    assert run(tmp_path, "sweep", "--model", "bouncing_ball", "--param", "omega", "--values", "1") == 2


def test_zero_gain_control_matches_simulate(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    common = ["--model", "pyragas_example1", "--control_C", "0", "--t_end", "10"]
    assert main(["simulate", "--out", str(a), *common]) == 0
    main(["control", "--out", str(b), *common])
    name = "pyragas_example1_report.json"
    assert (a / name).read_bytes() == (b / name).read_bytes()
    outcome = json.loads((b / "pyragas_example1_outcome.json").read_text())
    assert outcome["control"] == {"C": 0.0, "tau": 1.0}


def test_control_requires_feedback(tmp_path):
    assert run(tmp_path, "control", "--model", "example1") == 2


def test_trace_records_direct():
    m = instantiate("bouncing_ball")
    traj = simulate(m.system, m.init, m.t_end)
    recs = output.trace_records(traj)
    assert sum(1 for r in recs if r.flag == "impact") == 2 * len(traj.impacts)
    assert any(r.flag == "stick" for r in recs)
    assert all(math.isfinite(r.t) for r in recs)
