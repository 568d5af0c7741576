import json

import pytest

from nonsubmax.bench import ExperimentConfig, gen_instance
from nonsubmax.cli import main
from nonsubmax.core import ConstraintSpec, GroundSet, ModularFunction, ProblemInstance
from nonsubmax.io import instance_to_dict, save_instance


@pytest.fixture
def budget_file(tmp_path):
    data = {
        "blocks": [["a", "b"], ["c"]],
        "objective": {"kind": "coverage", "payload": {"covers": {"a": [0, 1], "b": [1, 2], "c": [3]}}},
        "constraints": [
            {"kind": "budget", "scope_block": 0, "budget": 1.0, "payload": {"costs": {"a": 1.0, "b": 1.0}}},
            {"kind": "cardinality", "scope_block": 1, "budget": 1},
        ],
        "disjoint_blocks": True,
    }
    p = tmp_path / "inst.json"
    p.write_text(json.dumps(data))
    return p


@pytest.fixture
def kalman_file(tmp_path):
    p = tmp_path / "k.json"
    save_instance(gen_instance(ExperimentConfig(), 2.0, 0), p)
    return p


def _json(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.mark.parametrize("alg", ["parallel", "general"])
def test_solve(budget_file, tmp_path, capsys, alg):
    trace = tmp_path / "t.json"
    assert main(["solve", str(budget_file), "--alg", alg, "--trace", str(trace)]) == 0
    out = _json(capsys)
    assert out["feasible"] and out["value"] == 3.0
    assert json.loads(trace.read_text())


def test_oracle(budget_file, capsys):
    assert main(["oracle", str(budget_file)]) == 0
    out = _json(capsys)
    assert out["value"] == 3.0 and out["feasible_sets"] == 6


def test_ratios_exact(budget_file, capsys):
    assert main(["ratios", str(budget_file), "--witnesses"]) == 0
    out = _json(capsys)
    assert out["objective"]["gamma"] == 1.0
    assert [c["alpha_ext"] for c in out["constraints"]] == [0.0, 0.0]
    assert "witnesses" in out["objective"]


def test_ratios_bounds(kalman_file, budget_file, capsys):
    assert main(["ratios", str(kalman_file), "--bounds"]) == 0
    out = _json(capsys)
    obj = out["objective"]
    assert 0 < obj["gamma_lower"] <= 1 and obj["alpha_upper"] == 1.0
    assert len(out["constraints"]) == 3
    assert main(["ratios", str(budget_file), "--bounds"]) == 2


def test_gen_and_bench(tmp_path, capsys):
    assert main(["gen", "--preset", "paper-fig1", "--trials", "2", "-o", str(tmp_path / "g")]) == 0
    files = sorted(p.name for p in (tmp_path / "g").iterdir())
    assert "config.json" in files and "sigma1_trial1.json" in files and len(files) == 61
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(ExperimentConfig(trials=1, sigma_range=[1.0, 2.0]).to_dict()))
    csv = tmp_path / "perf.csv"
    assert main(["bench", "perf", "--config", str(cfg), "-o", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 3
    assert (tmp_path / "perf_summary.csv").exists()
    assert main(["plot", str(csv), "-o", str(tmp_path / "fig")]) == 0
    assert (tmp_path / "fig" / "perf_ratios.svg").exists()


def test_bench_runtime(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(ExperimentConfig(state_dim=3, trials=1, m_sweep=[4, 5]).to_dict()))
    csv = tmp_path / "rt.csv"
    assert main(["bench", "runtime", "--config", str(cfg), "-o", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 3


def test_input_errors(tmp_path, budget_file):
    assert main(["solve", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["oracle", str(bad)]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 0}))
    assert main(["bench", "perf", "--config", str(cfg), "-o", str(tmp_path / "x.csv")]) == 2
    empty = tmp_path / "e.csv"
    empty.write_text("")
    assert main(["plot", str(empty), "-o", str(tmp_path / "p")]) == 2


def _wide(n):
    labels = [f"x{i}" for i in range(n)]
    g = GroundSet.from_blocks([labels])
    f = ModularFunction({i: 1.0 for i in range(n)})
    return ProblemInstance(g, f, [ConstraintSpec(ModularFunction({i: 1.0 for i in range(n)}), g.block_mask(0), 2.0, 0)], True)


def test_size_limits(tmp_path):
    p = tmp_path / "wide.json"
    save_instance(_wide(21), p)
    assert main(["oracle", str(p)]) == 3
    save_instance(_wide(13), p)
    assert main(["ratios", str(p)]) == 3


def test_numerical_failure(tmp_path):
    data = instance_to_dict(gen_instance(ExperimentConfig(), 1.0, 0))
    data["objective"]["payload"]["sigma"] = [1e-200] * 9
    p = tmp_path / "k.json"
    p.write_text(json.dumps(data))
    assert main(["solve", str(p)]) == 4
