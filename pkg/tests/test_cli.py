import csv
import json

import pytest

from rfc.cli import EXIT_IO, EXIT_OK, EXIT_RHP_ZERO, EXIT_UNSTABLE, EXIT_USAGE, main, parse_grid
from rfc.config import load_config
from rfc.errors import ConfigError
from rfc.sim import TRACE_COLUMNS


def run(tmp_path, *args):
    return main(list(args) + ["--out", str(tmp_path)])


def report(tmp_path):
    return json.loads((tmp_path / "report.json").read_text())


@pytest.mark.parametrize("name,code", [("fig2a", EXIT_OK), ("fig2b", EXIT_OK), ("fig2c", EXIT_RHP_ZERO),
                                       ("fig2d", EXIT_OK), ("fig3", EXIT_OK)])
def test_check_exit_codes(tmp_path, name, code):
    assert run(tmp_path, "check", "--config", name) == code
    rep = report(tmp_path)
    assert rep["exit_code"] == code
    assert rep["minimum_phase"]["has_integrator"]
    codes = {w["code"] for w in rep["warnings"]}
    if name == "fig2c":
        assert {"RHP_ZERO", "UNSTABLE"} <= codes
        assert rep["closed_loop"]["critical_gain"] == pytest.approx(1.1187, rel=1e-3)
    if name == "fig2a":
        assert "PZ_CANCELLATION" in codes


def test_check_summary_line(tmp_path, capsys):
    run(tmp_path, "check", "--config", "fig2d")
    out = capsys.readouterr().out
    assert "minimum-phase, relative degree 1, lead compensator" in out


def test_tf_csv(tmp_path):
    assert run(tmp_path, "tf", "--config", "fig2d") == EXIT_OK
    raw = (tmp_path / "tf.csv").read_bytes()
    assert raw.count(b"\r\n") == raw.count(b"\n")
    rows = list(csv.DictReader(open(tmp_path / "tf.csv", newline="")))
    names = {r["tf"] for r in rows}
    assert names == {"L", "T_tau_d", "T_tau_i", "T_noise"}
    den = [r for r in rows if r["tf"] == "L" and r["part"] == "den"]
    assert den[0]["power"] == "4" and float(den[0]["coeff"]) == 1.0


def test_rlocus_outputs(tmp_path):
    assert run(tmp_path, "rlocus", "--config", "fig2c") == EXIT_OK
    rows = list(csv.reader(open(tmp_path / "rlocus.csv", newline="")))
    assert rows[0] == ["gain", "branch_index", "re", "im"]
    assert len(rows) == 1 + 60 * 4
    svg = (tmp_path / "rlocus.svg").read_text()
    assert svg.startswith("<?xml") and "<svg" in svg and "<circle" in svg
    assert "UNSTABLE_BRANCH" in {w["code"] for w in report(tmp_path)["warnings"]}


def test_step_outputs(tmp_path):
    assert run(tmp_path, "step", "--config", "fig3") == EXIT_OK
    rows = list(csv.reader(open(tmp_path / "step.csv", newline="")))
    assert tuple(rows[0]) == TRACE_COLUMNS
    assert len(rows) == 1 + 20001
    assert float(rows[-1][4]) == pytest.approx(1.0, abs=1e-6)
    rep = report(tmp_path)
    assert rep["metrics"]["overshoot"] == pytest.approx(0.1459, abs=1e-3)
    assert (tmp_path / "step.svg").exists()


def test_step_unstable_writes_partial_trace(tmp_path):
    assert run(tmp_path, "step", "--config", "fig2c") == EXIT_UNSTABLE
    assert (tmp_path / "step.csv").exists()
    assert "UNSTABLE" in {w["code"] for w in report(tmp_path)["warnings"]}


def test_sweep(tmp_path):
    code = run(tmp_path, "sweep", "--config", "fig3", "--param", "servo.J_mi", "--grid", "0.125,0.25,0.5")
    assert code == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv", newline="")))
    assert [r["stable"] for r in rows] == ["true", "true", "false"]
    assert [r["rhp_zero"] for r in rows] == ["false", "false", "true"]
    assert rows[2]["settling_time"] == "nan"
    over = [float(r["overshoot"]) for r in rows]
    assert over[0] < over[1] < over[2]


def test_parse_grid():
    assert parse_grid("1:2:3").tolist() == [1.0, 1.5, 2.0]
    assert parse_grid("0.5, 2").tolist() == [0.5, 2.0]
    for bad in ("1:2", "x,y", "1:2:0", ""):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_usage_and_config_errors(tmp_path):
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["check"]) == EXIT_USAGE
    assert run(tmp_path, "check", "--config", str(tmp_path / "missing.json")) == EXIT_USAGE
    assert run(tmp_path, "sweep", "--config", "fig3", "--param", "servo.nope", "--grid", "1,2") == EXIT_USAGE


def test_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["check", "--config", "fig2d", "--out", str(blocker / "sub")]) == EXIT_IO


def _noisy(tmp_path, seed):
    cfg = json.loads(load_config("fig2d").model_dump_json())
    cfg["sim"].update(t_end=0.01, noise_std=1e-3, seed=seed)
    p = tmp_path / f"noisy{seed}.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_seed_precedence(tmp_path, monkeypatch):
    path = _noisy(tmp_path, 5)
    monkeypatch.delenv("RFC_SEED", raising=False)
    main(["step", "--config", path, "--out", str(tmp_path / "cfg")])
    assert report(tmp_path / "cfg")["seed"] == 5
    monkeypatch.setenv("RFC_SEED", "7")
    main(["step", "--config", path, "--out", str(tmp_path / "env")])
    assert report(tmp_path / "env")["seed"] == 7
    main(["step", "--config", path, "--out", str(tmp_path / "flag"), "--seed", "8"])
    assert report(tmp_path / "flag")["seed"] == 8
    monkeypatch.setenv("RFC_SEED", "abc")
    assert main(["step", "--config", path, "--out", str(tmp_path / "bad")]) == EXIT_USAGE


def _write(tmp_path, mutate, name="cfg.json"):
    cfg = json.loads(load_config("fig2d").model_dump_json())
    mutate(cfg)
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_invalid_inertia_and_empty_grid_exit_64(tmp_path):
    bad = _write(tmp_path, lambda c: c["servo"].update(J_mi=0.0), "j.json")
    assert run(tmp_path / "a", "check", "--config", bad) == EXIT_USAGE
    empty = _write(tmp_path, lambda c: c["analysis"].update(gain_grid=[]), "g.json")
    assert run(tmp_path / "b", "rlocus", "--config", empty) == EXIT_USAGE


def test_rlocus_fig2a_has_four_branches(tmp_path):
    run(tmp_path, "rlocus", "--config", "fig2a")
    rows = list(csv.DictReader(open(tmp_path / "rlocus.csv", newline="")))
    assert {r["branch_index"] for r in rows} == {"0", "1", "2", "3"}


def test_sweep_rhp_flag_flips_at_exact_inertia(tmp_path):
    cfg = _write(tmp_path, lambda c: c["sim"].update(t_end=0.01))
    run(tmp_path, "sweep", "--config", cfg, "--param", "servo.J_mi", "--grid", "0.0625:0.5:8")
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv", newline="")))
    for r in rows:
        assert (r["rhp_zero"] == "true") == (float(r["value"]) > 0.25)


def test_sweep_gain_flips_stability_at_critical_gain(tmp_path):
    run(tmp_path / "rl", "rlocus", "--config", "fig2c")
    c_star = report(tmp_path / "rl")["root_locus"]["critical_gain"]
    cfg = _write(tmp_path, lambda c: (c["servo"].update(J_mi=0.5), c["sim"].update(t_end=0.01)))
    run(tmp_path, "sweep", "--config", cfg, "--param", "controller.C_f", "--grid", "0.25:2.5:10")
    rows = list(csv.DictReader(open(tmp_path / "sweep.csv", newline="")))
    for r in rows:
        assert (r["stable"] == "true") == (float(r["value"]) < c_star)


def test_sweep_single_point(tmp_path):
    cfg = _write(tmp_path, lambda c: c["sim"].update(t_end=0.01))
    run(tmp_path, "sweep", "--config", cfg, "--param", "rtob.bandwidth", "--grid", "800")
    assert len(list(csv.reader(open(tmp_path / "sweep.csv", newline="")))) == 2


def test_sweep_non_numeric_field(tmp_path):
    assert run(tmp_path, "sweep", "--config", "fig2d", "--param", "sim.tau_i_mode", "--grid", "1") == EXIT_USAGE
