import json
from pathlib import Path

import pytest

from fairmatch import read_instance
from fairmatch.cli import main

DATA = Path(__file__).parent / "data"


def test_generate_synthetic(tmp_path, capsys):
    out = tmp_path / "inst.json"
    code = main(["generate", "--kind", "synthetic", "--n-offline", "6",
                 "--horizon", "8", "--degree", "2", "--seed", "4",
                 "--out", str(out)])
    assert code == 0
    inst = read_instance(out)
    assert inst.n_offline == 6 and inst.horizon == 8
    assert "wrote" in capsys.readouterr().out


def test_generate_adversarial_kinds(tmp_path):
    e1 = tmp_path / "e1.json"
    ew = tmp_path / "ew.json"
    assert main(["generate", "--kind", "example1", "--n", "4",
                 "--out", str(e1)]) == 0
    assert main(["generate", "--kind", "example-worst", "--n", "5",
                 "--out", str(ew)]) == 0
    assert read_instance(e1).n_offline == 13
    assert read_instance(ew).n_offline == 5


def test_ingest_trips_and_graph(tmp_path):
    trips_out = tmp_path / "trips.json"
    code = main(["ingest", "trips", "--csv", str(DATA / "trips_sample.csv"),
                 "--window-start", "2020-09-29T17:00:00",
                 "--window-end", "2020-09-29T20:00:00",
                 "--horizon", "30", "--seed", "2", "--out", str(trips_out)])
    assert code == 0
    assert read_instance(trips_out).n_offline == 30

    graph_out = tmp_path / "graph.json"
    code = main(["ingest", "graph", "--edges", str(DATA / "collab.edges"),
                 "--seed", "1", "--weight-seed", "2", "--out", str(graph_out)])
    assert code == 0
    assert read_instance(graph_out).n_offline == 6


def _write_instance(tmp_path):
    out = tmp_path / "inst.json"
    main(["generate", "--n-offline", "5", "--horizon", "6", "--degree", "2",
          "--seed", "9", "--out", str(out)])
    return out


def test_solve_lp_and_export(tmp_path):
    inst = _write_instance(tmp_path)
    sol = tmp_path / "sol.json"
    lp_text = tmp_path / "model.lp"
    code = main(["solve-lp", "--instance", str(inst), "--objective", "ifm",
                 "--normalize", "--export-lp", str(lp_text),
                 "--out", str(sol)])
    assert code == 0
    doc = json.loads(sol.read_text())
    assert doc["objective_kind"] == "ifm"
    assert 0.0 < doc["objective_value"] <= 1.0
    assert "Minimize" in lp_text.read_text() or "obj:" in lp_text.read_text()


def test_plan_attenuation_uses_cache(tmp_path, capsys):
    inst = _write_instance(tmp_path)
    sol = tmp_path / "sol.json"
    main(["solve-lp", "--instance", str(inst), "--objective", "ifm",
          "--normalize", "--out", str(sol)])
    table = tmp_path / "table.json"
    args = ["plan-attenuation", "--instance", str(inst), "--solution",
            str(sol), "--sim-count", "15", "--seed", "3", "--out", str(table)]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert "wrote" in first
    before = table.read_bytes()
    assert main(args) == 0
    assert "cached" in capsys.readouterr().out
    assert table.read_bytes() == before


def test_run_and_report(tmp_path, capsys):
    inst = _write_instance(tmp_path)
    rep = tmp_path / "report.json"
    code = main(["run", "--instance", str(inst), "--objective", "ifm",
                 "--policy", "samp-b", "--policy", "greedy",
                 "--trials", "40", "--seed", "6", "--out", str(rep)])
    assert code == 0
    capsys.readouterr()
    assert main(["report", "--in", str(rep)]) == 0
    shown = capsys.readouterr().out
    assert "samp-b" in shown and "greedy" in shown

    rep2 = tmp_path / "report2.json"
    main(["run", "--instance", str(inst), "--objective", "ifm",
          "--policy", "samp-b", "--policy", "greedy",
          "--trials", "40", "--seed", "6", "--out", str(rep2)])
    assert rep.read_bytes() == rep2.read_bytes()


def test_run_csv_output(tmp_path):
    inst = _write_instance(tmp_path)
    rep = tmp_path / "report.csv"
    code = main(["run", "--instance", str(inst), "--objective", "vom",
                 "--policy", "greedy", "--trials", "20", "--seed", "1",
                 "--out", str(rep)])
    assert code == 0
    lines = rep.read_text().splitlines()
    assert lines[0].startswith("policy,")
    assert lines[1].startswith("greedy,")


def test_sweep_cli(tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "generator": {"kind": "synthetic", "n_offline": 4, "T": 5,
                      "degree": 2},
        "policies": ["greedy"], "objective": "ifm", "trials": 10,
        "master_seed": 3, "instances_per_cell": 1}))
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.read_text().count("\n") == 3   # comment, header, one row


def test_bound_subcommands(capsys):
    assert main(["bound", "sampb", "--tau", "1.0"]) == 0
    assert "0.725430862868746" in capsys.readouterr().out
    assert main(["bound", "sampab", "--x-star", "0.6321205588285577",
                 "--kappa", "1.0"]) == 0
    assert "0.71945" in capsys.readouterr().out
    assert main(["bound", "minimizer-set", "--tau", "0.7"]) == 0
    out = capsys.readouterr().out
    assert "0.632" in out


def test_exit_codes(tmp_path, capsys):
    # usage errors: unknown objective value
    inst = _write_instance(tmp_path)
    capsys.readouterr()
    assert main(["solve-lp", "--instance", str(inst), "--objective", "nope",
                 "--out", str(tmp_path / "x.json")]) == 1
    # data errors: missing file
    assert main(["run", "--instance", str(tmp_path / "missing.json"),
                 "--objective", "ifm", "--policy", "greedy", "--trials", "5",
                 "--seed", "1", "--out", str(tmp_path / "x.json")]) == 2
    # data errors: malformed sweep config
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["sweep", "--config", str(bad),
                 "--out", str(tmp_path / "x.csv")]) == 2
    capsys.readouterr()


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "usage" in capsys.readouterr().out.lower()
