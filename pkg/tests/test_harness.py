import csv
import json

import pytest

from budgetmax.cli import main
from budgetmax.diffusion import read_network
from budgetmax.harness import (CascadeFormatError, CascadeRecord, ConfigError, ExperimentConfig,
                               build_assets, format_cascades, heldout_evaluate, parse_cascades,
                               rows_to_csv, run_experiment, sweep)

SMALL = dict(products=2, candidates=8, power=5, samples=32, product_capacity=2, user_capacity=1,
             horizon=2.0)


def small(**kw):
    return ExperimentConfig(**{**SMALL, **kw})


def test_parse_cascade_examples():
    (c,) = parse_cascades("0; 5:0.0,12:1.3,7:2.8\n")
    assert c.product == 0 and c.events == [(5, 0.0), (12, 1.3), (7, 2.8)]
    assert parse_cascades("") == []
    assert parse_cascades("# comment\n\n1; 3:0.5\n")[0].nodes == [3]


@pytest.mark.parametrize("text, where", [("0; 1:0.0\n0; 5:2.0,6:1.0\n", "line 2"),
                                         ("0 5:1.0\n", "line 1"), ("x; 5:1.0\n", "line 1"),
                                         ("0; 5=1.0\n", "line 1"), ("0; 5:1.0,6:1.0\n", "line 1")])
def test_cascade_errors_carry_line_numbers(text, where):
    with pytest.raises(CascadeFormatError, match=where):
        parse_cascades(text)


def test_cascade_roundtrip():
    cs = [CascadeRecord(0, [(1, 0.0), (2, 0.25)]), CascadeRecord(3, [(7, 1.5)])]
    assert parse_cascades(format_cascades(cs)) == cs


def test_heldout_examples():
    cs = parse_cascades("0; 1:0,2:1,3:2\n")
    assert heldout_evaluate([(0, 1)], cs) == 2.0
    assert heldout_evaluate([(0, 2)], cs) == 1.0
    assert heldout_evaluate([(0, 4)], cs) == 0.0
    assert heldout_evaluate([(1, 1)], cs) == 0.0
    two = parse_cascades("0; 1:0,2:1,3:2\n0; 2:0,1:1\n")
    assert heldout_evaluate([(0, 1)], two) == (2 + 0) / 2
    assert heldout_evaluate([(0, 1), (0, 2)], two) == 1.0 + 1.0


@pytest.mark.parametrize("bad", [{"products": 0}, {"delta": 0}, {"bogus": 1},
                                 {"budgets": 3.0, "product_capacity": 2},
                                 {"product_capacity": None}, {"algorithms": ["degree-local"]},
                                 {"network_types": ["lattice"]}, {"horizon": [1.0]},
                                 {"candidates": 64, "power": 5}, {"cascades": "missing.txt"}])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**SMALL, **bad})


def test_budgets_switch_off_product_capacity():
    cfg = ExperimentConfig.from_dict({k: v for k, v in SMALL.items() if k != "product_capacity"} | {"budgets": 2.0})
    assert cfg.knapsack_mode and cfg.product_capacity is None
    assets = build_assets(cfg)
    assert assets.constraints.k == 2
    assert all(0 < c <= 1 for c in assets.constraints.knapsack.costs.values())


def test_reported_values_match_recomputation():
    cfg = small(algorithms=["budgetmax", "lazy", "degree", "random"], groups=2, group_limit=1)
    rows, reports = run_experiment(cfg)
    assets = build_assets(cfg)
    for row, rep in zip(rows, reports):
        assert row["objective"] == assets.objective.evaluate(rep.selected)
        assert assets.constraints.is_feasible(rep.selected)


def _strip_time(text):
    rows = list(csv.DictReader(text.splitlines()))
    for r in rows:
        r.pop("wall_time")
    return rows


def test_sweep_is_reproducible_except_timing():
    cfg = small(algorithms=["budgetmax", "degree", "random"])
    a = rows_to_csv(sweep(cfg, "user_constraint", [1, 2])[0])
    b = rows_to_csv(sweep(cfg, "user_constraint", [1, 2], workers=2)[0])
    assert _strip_time(a) == _strip_time(b)


def test_delta_sweep_records_relative_value():
    rows, _ = sweep(small(), "delta", [0.1, 1.0])
    lazy = [r for r in rows if r["algorithm"] == "lazy"]
    assert len(lazy) == 2 and all(r["relative_to_lazy"] == 1.0 for r in lazy)
    assert all(isinstance(r["relative_to_lazy"], float) for r in rows)


@pytest.mark.parametrize("axis, values", [("time_window", [0.5, 1.0, 2.0, 5.0]),
                                          ("product_budget", [1, 2, 3])])
def test_sweep_monotone_sanity(axis, values):
    rows, _ = sweep(small(algorithms=["budgetmax"]), axis, values)
    v = [r["objective"] for r in rows]
    assert v == sorted(v)


def _write_config(tmp_path, **kw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**SMALL, **kw}))
    return str(p)


def test_cli_generate_optimize_evaluate(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assets = tmp_path / "assets"
    assert main(["generate", "--config", cfg, "--out", str(assets), "--cascades", "5"]) == 0
    manifest = json.loads((assets / "manifest.json").read_text())
    assert read_network(assets / manifest["networks"][0]["file"]).node_count == 32

    nets = [manifest["networks"][i]["file"] for i in range(2)]
    cfg2 = _write_config(tmp_path, networks=[f"assets/{f}" for f in nets], cascades="assets/cascades.txt")
    out = tmp_path / "run"
    assert main(["optimize", "--config", cfg2, "--out", str(out), "--algo", "lazy"]) == 0
    rows = list(csv.DictReader((out / "optimize.csv").open()))
    assert [r["algorithm"] for r in rows] == ["lazy"] and rows[0]["heldout"] != ""
    report = json.loads((out / "optimize.json").read_text())
    assert report["config"]["delta"] == 0.01  # defaults echoed

    capsys.readouterr()
    assert main(["evaluate", "--allocation", str(out / "optimize.json"),
                 "--cascades", str(assets / "cascades.txt")]) == 0
    printed = float(capsys.readouterr().out.split(":")[1])
    assert printed == float(rows[0]["heldout"])


def test_cli_sweep_and_brute_check(tmp_path):
    cfg = _write_config(tmp_path, sweep={"axis": "time_window", "values": [1.0, 2.0]})
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    assert len(list(csv.DictReader((tmp_path / "sweep_time_window.csv").open()))) == 6
    assert main(["brute-check", "--instances", "2", "--out", str(tmp_path)]) == 0


def test_cli_exit_codes(tmp_path):
    assert main(["optimize", "--config", str(tmp_path / "nope.json")]) == 2
    assert main(["optimize", "--config", _write_config(tmp_path, delta=-1)]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("0; 1:2.0,2:1.0\n")
    alloc = tmp_path / "alloc.json"
    alloc.write_text("[[0, 1]]")
    assert main(["evaluate", "--allocation", str(alloc), "--cascades", str(bad)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--axis", "colour"])
    assert exc.value.code == 2
