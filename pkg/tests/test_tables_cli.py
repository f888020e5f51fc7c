import json

import numpy as np
import pytest

from fimlab import experiments
from fimlab.cli import main
from fimlab.exceptions import InvalidOverride, IoFailure, UnknownExperiment
from fimlab.tables import ResultTable, emit, format_cell, load_json, render, to_csv, to_markdown

SMALL_MIX = {"reps_outer": 30, "reps_target": 60, "theta_star": [0.5, 0.0, 2.0], "n": 100}


def _table():
    t = ResultTable("demo", ["name", "value"], metadata={"seed": 1})
    t.add("a", 1.5)
    t.add("b, c", np.nan)
    return t


def test_csv_shapes():
    empty = ResultTable("e", ["x", "y"])
    assert to_csv(empty) == "x,y\n"
    text = to_csv(_table())
    assert text.count("\n") == 3 and "\r" not in text
    assert text.splitlines()[2] == '"b, c",nan'


def test_format_cell():
    assert format_cell(-0.0) == "0"
    assert format_cell(-1e-20) == "-1e-20"
    assert format_cell(float("inf")) == "inf" and format_cell(-np.inf) == "-inf"
    assert format_cell(1.23456789) == "1.23457"
    assert format_cell(np.int64(7)) == "7" and format_cell(True) == "true"


def test_json_round_trip_and_markdown():
    t = _table()
    back = load_json(render(t, "json"))
    assert back.title == t.title and back.columns == t.columns
    assert back.rows[0] == ["a", 1.5] and np.isnan(back.rows[1][1])
    assert back.metadata == {"seed": 1}
    md = to_markdown(t)
    assert "| name | value |" in md and "| a | 1.5 |" in md
    with pytest.raises(ValueError):
        render(t, "xml")


def test_emit_writes_sidecar_and_reports_failures(tmp_path):
    out = tmp_path / "t.csv"
    emit(_table(), "csv", out)
    assert out.read_text() == to_csv(_table())
    assert json.loads((tmp_path / "t.csv.meta.json").read_text())["metadata"] == {"seed": 1}
    with pytest.raises(IoFailure):
        emit(_table(), "csv", tmp_path / "missing" / "t.csv")


def test_registry():
    names = experiments.list_experiments()
    assert len(names) == 10
    assert all(desc and table for _, table, desc in names)
    with pytest.raises(UnknownExperiment):
        experiments.get_experiment("nope")


def test_config_validation():
    with pytest.raises(InvalidOverride):
        experiments.run({"experiment": "spsa_table_A2", "overrides": {"bogus": 1}})
    with pytest.raises(InvalidOverride):
        experiments.run({"experiment": "spsa_table_A2", "overrides": {"sigma2": "loud"}})
    with pytest.raises(InvalidOverride):
        experiments.run({"experiment": "spsa_table_A2", "seed": 1, "overrides": {"seed": 2}})
    with pytest.raises(InvalidOverride):
        experiments.run({"experiment": "spsa_table_A2", "seed": -1})


def test_spsa_table_small_run():
    t = experiments.run({"experiment": "spsa_table_A2"}, reps=10)
    assert len(t.rows) == 4
    nums = [c for row in t.rows for c in row if isinstance(c, float)]
    assert nums and all(np.isfinite(nums))
    assert t.metadata["experiment"] == "spsa_table_A2" and t.metadata["seed"] == 0


def test_seed_in_overrides_equals_top_level():
    a = experiments.run({"experiment": "spsa_table_A2", "overrides": {"seed": 5}}, reps=5)
    b = experiments.run({"experiment": "spsa_table_A2", "seed": 5}, reps=5)
    assert render(a, "json") == render(b, "json")


def test_mixture_run_is_reproducible():
    cfg = {"experiment": "mixture_table_3_1", "seed": 7, "overrides": SMALL_MIX}
    assert render(experiments.run(cfg), "csv") == render(experiments.run(cfg), "csv")


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["list"]) == 0
    assert "mixture_table_3_1" in capsys.readouterr().out
    assert main(["schema"]) == 0
    assert "overrides" in json.loads(capsys.readouterr().out)
    assert main(["run", "nope"]) == 2
    assert "config error" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad)]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "spsa_table_A2", "overrides": {"nope": 1}}))
    assert main(["run", str(cfg)]) == 2
    assert main(["run", "spsa_table_A2", "--reps", "3", "--out", str(tmp_path / "no" / "x.csv")]) == 3
    assert "study error" in capsys.readouterr().err


def test_cli_run_writes_file(tmp_path, capsys):
    out = tmp_path / "a2.md"
    assert main(["run", "spsa_table_A2", "--reps", "3", "--format", "md", "--out", str(out)]) == 0
    assert out.read_text().startswith("## ")
    assert "spsa_table_A2:" in capsys.readouterr().err


def test_cli_large_scale_warning(monkeypatch, capsys):
    # skip the actual computation; only the warning path is under test
    monkeypatch.setattr(experiments, "run", lambda *a, **k: ResultTable("x", ["a"]))
    assert main(["run", "mixture_table_3_1", "--scale", "paper"]) == 0
    assert "warning: paper-scale" in capsys.readouterr().err
