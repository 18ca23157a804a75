# -*- coding: utf-8 -*-
import csv
import json
import os

import numpy as np
import pytest

from bethelab import load_config_file, parse_config
from experiments import (
    CELL_COLUMNS,
    ExperimentConfig,
    emit_report,
    get_experiment,
    list_experiments,
    parse_int_list,
    run_experiment,
    summarize,
)


def read_cells(path):
    with open(path, newline='', encoding='utf-8') as f:
        return list(csv.DictReader(f))


def values_of(cells, quantity):
    return [float(c["value"]) for c in cells if c["quantity"] == quantity and c["status"] == "ok"]


def test_parse_lists():
    assert parse_int_list("0..3") == [0, 1, 2, 3]
    assert parse_int_list("1,2,4") == [1, 2, 4]
    assert parse_int_list("5") == [5]
    assert parse_int_list("") == []
    with pytest.raises(ValueError):
        parse_int_list("3..1")


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(epsilon=0.6)
    with pytest.raises(ValueError):
        ExperimentConfig(cutm_mode="lower")
    with pytest.raises(ValueError):
        ExperimentConfig(model="ising")
    with pytest.raises(ValueError):
        ExperimentConfig(seeds="")
    with pytest.raises(ValueError):
        ExperimentConfig(radii="")
    with pytest.raises(ValueError):
        ExperimentConfig(symmetry_order=1)
    config = ExperimentConfig(m=3)
    assert config.d is None and config.model_spec(0).m == 3
    assert "output_dir" not in config.report_dict()


def test_registry():
    assert list_experiments() == ["bethe", "bp", "coupling", "cutm", "pin", "potts", "sweep"]
    with pytest.raises(ValueError):
        get_experiment("train")


def test_summarize():
    stats = summarize([1.0, 2.0, 3.0, 4.0])
    assert stats["count"] == 4 and stats["mean"] == pytest.approx(2.5)
    assert stats["median"] == pytest.approx(2.5)
    assert stats["stderr"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert summarize([])["mean"] is None


def test_empty_report(tmp_path):
    paths = emit_report([], ExperimentConfig(name="bethe"), str(tmp_path))
    with open(paths["cells"], encoding='utf-8') as f:
        assert f.read() == ",".join(CELL_COLUMNS) + "\n"
    with open(paths["summary"], encoding='utf-8') as f:
        assert json.load(f)["groups"] == []


def test_reports_are_deterministic(tmp_path):
    config = ExperimentConfig(name="bethe", n=5, d=1.0, seeds="0,1", full_cube=True, ell=2)
    first = emit_report(run_experiment(config), config, str(tmp_path / "a"))
    second = emit_report(run_experiment(config), config, str(tmp_path / "b"))
    for key in ("cells", "summary"):
        with open(first[key], 'rb') as f, open(second[key], 'rb') as g:
            assert f.read() == g.read()


def test_workers_do_not_change_results(tmp_path):
    config = ExperimentConfig(name="sweep", n=5, d=1.0, seeds="0..2", ell=2, condition_acyclic=True)
    serial = emit_report(run_experiment(config), config, str(tmp_path / "serial"))
    config.num_workers = 2
    parallel = emit_report(run_experiment(config), config, str(tmp_path / "parallel"))
    with open(serial["cells"], 'rb') as f, open(parallel["cells"], 'rb') as g:
        assert f.read() == g.read()


def test_bp_on_empty_graphs(tmp_path):
    config = ExperimentConfig(name="bp", n=4, m=0, seeds="0", full_cube=True)
    paths = emit_report(run_experiment(config), config, str(tmp_path))
    cells = read_cells(paths["cells"])
    assert values_of(cells, "bp_residual") == [0.0]
    assert values_of(cells, "canonical_residual") == [0.0]
    with open(paths["messages"], encoding='utf-8') as f:
        assert json.load(f) == {"0": []}


def test_pin_sweep_ends_at_zero(tmp_path):
    config = ExperimentConfig(name="pin", n=6, d=2.0, seeds="0..1", thetas="1,6")
    paths = emit_report(run_experiment(config), config, str(tmp_path))
    cells = read_cells(paths["cells"])
    at_n = [float(c["value"]) for c in cells if c["quantity"] == "sampled_state_cutm" and c["theta"] == "6"]
    assert at_n == [0.0, 0.0]
    assert all(float(c["value"]) >= 0 for c in cells)


def test_cutm_writes_overlaps(tmp_path):
    config = ExperimentConfig(name="cutm", n=4, d=1.0, seeds="3", cutm_mode="exact")
    paths = emit_report(run_experiment(config), config, str(tmp_path))
    cells = read_cells(paths["cells"])
    assert {c["quantity"] for c in cells} == {"cutm_to_product", "observable_gap", "overlap_d1", "symmetry2",
                                             "symmetry3"}
    with open(paths["witnesses"], encoding='utf-8') as f:
        witness = json.load(f)["3"]
    assert witness["value"] == pytest.approx(values_of(cells, "cutm_to_product")[0])
    assert witness["mode"] == "exact" and not witness["fallback"]
    rows = read_cells(paths["overlaps"])
    weights = {(r["atom"], r["weight"]) for r in rows}
    assert sum(float(w) for _, w in weights) == pytest.approx(1.0)


def test_tree_sweep(tmp_path):
    config = ExperimentConfig(name="sweep", n=6, d=0.5, seeds="0..3", ell=2, condition_acyclic=True,
                              full_cube=True)
    paths = emit_report(run_experiment(config), config, str(tmp_path))
    cells = read_cells(paths["cells"])
    assert all(v < 1e-9 for v in values_of(cells, "canonical_residual"))
    with open(paths["summary"], encoding='utf-8') as f:
        assert json.load(f)["coverage_fraction"] == 1.0


def test_budget_is_recorded(tmp_path):
    config = ExperimentConfig(name="bethe", n=6, d=1.0, seeds="0", full_cube=True, exact_budget=16)
    results = run_experiment(config)
    assert results[0].status == "budget_exceeded"
    paths = emit_report(results, config, str(tmp_path))
    with open(paths["summary"], encoding='utf-8') as f:
        assert json.load(f)["status_counts"] == {"budget_exceeded": 1}


def test_potts_sizes(tmp_path):
    config = ExperimentConfig(name="potts", sizes="4,5", d=1.0, seeds="0", full_cube=True, radii="0,1")
    paths = emit_report(run_experiment(config), config, str(tmp_path))
    cells = read_cells(paths["cells"])
    assert sorted({c["n"] for c in cells}) == ["4", "5"]
    assert sorted({c["r"] for c in cells if c["quantity"] == "potts_score_a"}) == ["0", "1"]
    with open(paths["summary"], encoding='utf-8') as f:
        assert 0.0 <= json.load(f)["bethe_fraction"] <= 1.0
    with pytest.raises(ValueError):
        run_experiment(ExperimentConfig(name="potts", model="ksat", k=3, seeds="0"))


def test_coupling_needs_its_flag():
    with pytest.raises(ValueError, match="disabled"):
        run_experiment(ExperimentConfig(name="coupling"))


def test_coupling_check_runs():
    config = ExperimentConfig(name="coupling", n=8, d=1.0, ell=2, seeds="0", coupling_samples=20,
                              enable_coupling_check=True)
    result = run_experiment(config)[0]
    tv = [c["value"] for c in result.cells if c["quantity"] == "coupling_tv"]
    assert len(tv) == 1 and (tv[0] is None or 0.0 <= tv[0] <= 1.0)


def test_parse_config_layers(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"n": 6, "seeds": "0..2", "beta": 0.5}))
    config = parse_config(["bp", "--config", str(path), "--n", "5", "--out", str(tmp_path / "out")])
    assert (config.name, config.n, config.seeds, config.beta) == ("bp", 5, "0..2", 0.5)
    assert config.output_dir == str(tmp_path / "out")
    config = parse_config(["cutm", "--exact-budget", "4096"])
    assert config.exact_budget == 4096 and config.name == "cutm"


def test_unknown_config_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"learning_rate": 1e-4}))
    with pytest.raises(ValueError, match="Unknown config keys"):
        load_config_file(str(path))


@pytest.mark.slow
def test_potts_bp_residual_trend():
    config = ExperimentConfig(name="potts", sizes="6,8", d=1.0, seeds="0..19", full_cube=True,
                              condition_acyclic=True)
    results = run_experiment(config)
    residuals = [c["value"] for r in results for c in r.cells if c["quantity"] == "potts_bp_residual"]
    assert max(residuals) < 1e-9


CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


def test_pinned_sweep_covers_its_mass(tmp_path):
    config = ExperimentConfig(name="sweep", n=6, d=0.5, seeds="0..4", ell=1, epsilon=0.25, theta_exponent=1.0,
                              max_states=64)
    results = run_experiment(config)
    paths = emit_report(results, config, str(tmp_path))
    cells = read_cells(paths["cells"])
    assert {c["state"] for c in cells if c["state"]} != {"full"}
    assert all(float(c["value"]) >= 0.75 for c in cells if c["quantity"] == "retained_mass")
    with open(paths["summary"], encoding='utf-8') as f:
        assert json.load(f)["coverage_fraction"] >= 0.8


@pytest.mark.slow
def test_tree_demo_config_covers_its_mass(tmp_path):
    values = load_config_file(os.path.join(CONFIG_DIR, "sweep_tree.json"))
    values.update(seeds="0..9", ell=1)
    config = ExperimentConfig(**values)
    paths = emit_report(run_experiment(config), config, str(tmp_path))
    with open(paths["summary"], encoding='utf-8') as f:
        assert json.load(f)["coverage_fraction"] >= 0.8


@pytest.mark.slow
def test_potts_tree_demo(tmp_path):
    config = ExperimentConfig(**load_config_file(os.path.join(CONFIG_DIR, "potts_tree.json")))
    results = run_experiment(config)
    paths = emit_report(results, config, str(tmp_path))
    with open(paths["summary"], encoding='utf-8') as f:
        summary = json.load(f)
    assert summary["bethe_fraction"] >= 0.8

    sizes = [8, 10, 12]
    score_b = {n: [c["value"] for r in results for c in r.cells
                   if c["quantity"] == "potts_score_b" and c["n"] == n and c["status"] == "ok"] for n in sizes}
    means = {n: np.mean(v) for n, v in score_b.items()}
    stderr = {n: np.std(v, ddof=1) / np.sqrt(len(v)) for n, v in score_b.items()}
    for smaller, larger in zip(sizes, sizes[1:]):
        assert means[larger] <= means[smaller] + max(stderr[smaller], stderr[larger])
