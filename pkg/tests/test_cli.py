import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from bmo_bellman import cli
from bmo_bellman.errors import ConstructionError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
QUICK = ["--function", "quartic-(0)", "--eps", "0.7"]


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_foliate_prints_signature(capsys, tmp_path):
    out_file = tmp_path / "fol.json"
    code, out, _ = run(["foliate", "--function", "quintic(1.5)", "--eps", "1", "--out", str(out_file)], capsys)
    assert code == 0
    assert out.strip().endswith("signature: LRL")
    doc = json.loads(out_file.read_text())
    assert doc["signature"] == "LRL"
    assert [fig["figure"] for fig in doc["figures"]] == ["L", "cup", "R", "angle", "L"]


def test_foliate_trace(capsys):
    code, _, err = run(["foliate", "--function", "quintic(1.2)", "--eps", "1", "--trace"], capsys)
    assert code == 0
    events = [json.loads(line[len("trace: "):]) for line in err.splitlines() if line.startswith("trace: ")]
    assert any(ev["event"] == "compress" for ev in events)


def test_eval_csv(capsys, tmp_path):
    out_file = tmp_path / "grid.csv"
    code, _, _ = run(["eval", "--config", str(CONFIGS / "quintic.json"), "--out", str(out_file)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out_file.read_text())))
    assert len(rows) == 81 * 11
    assert set(rows[0]) == {"x1", "x2", "B", "figure"}
    assert {r["figure"] for r in rows} == {"L", "cup", "R", "angle"}
    # floats are written in round-trip form
    assert all(float(repr(float(r["B"]))) == float(r["B"]) for r in rows[:20])


def test_eval_is_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.main(["eval", *QUICK, "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_optimizer_json(capsys):
    code, out, _ = run(["optimizer", "--function", "exp+", "--eps", "0.5", "--x1", "0", "--x2", "0.25"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["figure"] == "L"
    assert doc["moments"]["mf"] == pytest.approx(doc["B"], rel=1e-9)
    assert doc["bmo_norm"] <= 0.5 * (1 + 1e-6)


def test_optimizer_needs_point(capsys):
    code, _, err = run(["optimizer", *QUICK], capsys)
    assert code == 2 and "x1" in err
    code, _, _ = run(["optimizer", *QUICK, "--x1", "0", "--x2", "5"], capsys)
    assert code == 2


def test_verify_outputs(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"function": "quartic-(0)", "eps": 0.7,
                               "verify": {"concavity": {"n_segments": 100}, "monge_ampere": {"n": 30},
                                          "optimizers": {"n_per_figure": 3},
                                          "lower_bound": {"n": 4, "budget": 100, "n_tight": 2}}}))
    out_csv = tmp_path / "rep.csv"
    code, out, _ = run(["verify", "--config", str(cfg), "--seed", "3", "--out", str(out_csv)], capsys)
    assert code == 0
    assert out.count("PASS") == 5
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert [r["suite"] for r in rows] == ["boundary", "concavity", "monge_ampere", "optimizers", "lower_bound"]
    assert all(r["seed"] == "3" for r in rows)
    out_json = tmp_path / "rep.json"
    assert cli.main(["verify", "--config", str(cfg), "--out", str(out_json)]) == 0
    assert len(json.loads(out_json.read_text())) == 5


def test_verify_failure_exit_code(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"function": "exp+", "eps": 0.5,
                               "verify": {"concavity": {"n_segments": 50}, "monge_ampere": {"n": 10},
                                          "optimizers": {"n_per_figure": 2}, "lower_bound": {"n": 2, "budget": 50}}}))
    code, out, err = run(["verify", "--config", str(cfg), "--tol-override", "boundary=-1"], capsys)
    assert code == 5
    assert "FAIL" in out and "boundary" in err


def test_config_errors(capsys, tmp_path):
    assert run(["eval", "--function", "nope", "--eps", "1"], capsys)[0] == 2
    assert run(["eval", "--function", "cubic+"], capsys)[0] == 2
    assert run(["eval", *QUICK, "--tol-override", "bogus=1"], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["eval", "--config", str(bad)], capsys)[0] == 2


def test_class_gate_exit_code(capsys):
    code, _, err = run(["foliate", "--function", "exp+", "--eps", "1.2"], capsys)
    assert code == 3 and "eps0" in err


def test_construction_error_exit_code(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise ConstructionError("no balance")
    monkeypatch.setattr(cli, "foliate", boom)
    assert run(["foliate", *QUICK], capsys)[0] == 4


def test_piecewise_config(capsys):
    code, out, _ = run(["foliate", "--config", str(CONFIGS / "piecewise.json")], capsys)
    assert code == 0 and "signature: RL" in out


def test_plot_outputs(capsys, tmp_path):
    svg = tmp_path / "fol.svg"
    out = tmp_path / "lines.csv"
    code, _, _ = run(["plot", "--function", "quintic(1.2)", "--eps", "1", "--out", str(out), "--svg", str(svg)],
                     capsys)
    assert code == 0
    assert svg.read_text().startswith("<svg")
    labels = {r["figure"] for r in csv.DictReader(io.StringIO(out.read_text()))}
    assert {"lower", "upper", "cup", "trL", "L"} <= labels


def test_examples_command(capsys, tmp_path):
    out = tmp_path / "ex.json"
    code, stdout, _ = run(["examples", "--out", str(out)], capsys)
    assert code == 0
    assert stdout.count("PASS") == 8
    assert all(rec["passed"] for rec in json.loads(out.read_text()))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bmo_bellman", "foliate", "--function", "power(3)", "--eps", "1"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and "signature: RL" in res.stdout
