import json

import pytest
from hypothesis import given, strategies as st

from nonsubmax.bench import ExperimentConfig, gen_instance
from nonsubmax.errors import InstanceFormatError
from nonsubmax.greedy import general_greedy, parallel_greedy
from nonsubmax.io import (
    block_traces_to_dict,
    general_trace_to_dict,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
)
from nonsubmax.synthetic import make_rng, random_instance


def _same(a, b):
    assert a.ground == b.ground
    assert a.budgets == b.budgets
    n = a.size
    for m in range(1 << n):
        assert a.objective(m) == b.objective(m)
        assert [c.load(m) for c in a.constraints] == [c.load(m) for c in b.constraints]


@given(st.integers(0, 10**6), st.booleans())
def test_round_trip(seed, disjoint):
    inst = random_instance(make_rng(seed), disjoint=disjoint)
    back = instance_from_dict(json.loads(json.dumps(instance_to_dict(inst))))
    _same(inst, back)


def test_kalman_round_trip(tmp_path):
    inst = gen_instance(ExperimentConfig(), 3.0, 1)
    save_instance(inst, tmp_path / "k.json")
    _same(inst, load_instance(tmp_path / "k.json"))


def test_hand_written_instance():
    data = {
        "blocks": [["a", "b"], ["c"]],
        "objective": {"kind": "coverage", "payload": {"covers": {"a": [1, 2], "b": [2, 3], "c": ["x"]}, "weights": {"1": 2, "2": 1, "3": 1, "x": 4}}},
        "constraints": [
            {"kind": "budget", "payload": {"costs": {"a": 2, "b": 1}}, "budget": 2, "scope_block": 0},
            {"kind": "cardinality", "payload": {}, "budget": 1, "scope_block": 1},
        ],
    }
    inst = instance_from_dict(data)
    g = inst.ground
    assert inst.objective(g.mask_of_labels(["a", "b"])) == 4.0
    assert inst.objective(g.mask_of_labels(["c"])) == 4.0


@pytest.mark.parametrize(
    "bad",
    [
        [],
        {"blocks": [["a"]]},
        {"blocks": [["a"]], "objective": {"kind": "nope"}, "constraints": []},
        {"blocks": [["a"]], "objective": {"kind": "modular", "payload": {"weights": {"z": 1}}}, "constraints": []},
        {
            "blocks": [["a"]],
            "objective": {"kind": "modular", "payload": {"weights": {"a": 1}}},
            "constraints": [{"kind": "budget", "payload": {"costs": {}}, "budget": 1, "scope_block": 0}],
        },
        {
            "blocks": [["a"]],
            "objective": {"kind": "modular", "payload": {"weights": {"a": 1}}},
            "constraints": [{"kind": "latency", "payload": {"c": [1], "t": [0]}, "budget": 1, "scope_block": 0}],
        },
        {
            "blocks": [["a"]],
            "objective": {"kind": "modular", "payload": {"weights": {"a": 1}}},
            "constraints": [{"kind": "cardinality", "budget": 1, "scope_block": 3}],
        },
    ],
)
def test_malformed_rejected(bad):
    with pytest.raises(InstanceFormatError):
        instance_from_dict(bad)


def test_invalid_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{nope")
    with pytest.raises(InstanceFormatError):
        load_instance(p)


def test_trace_records(two_block, one_budget):
    _, traces = parallel_greedy(two_block)
    d = block_traces_to_dict(two_block, traces)
    b0 = d["blocks"][0]
    assert b0["accepted"] == ["b"] and b0["first_rejected"] == "a"
    assert b0["final_choice"] == "singleton" and b0["solution"] == ["a"]
    json.dumps(d)
    _, trace = general_greedy(one_budget)
    d = general_trace_to_dict(one_budget, trace)
    assert d["accepted"] == ["b", "c"]
    assert [s["accepted"] for s in d["steps"]] == [True, False, True]
    assert d["steps"][0]["ratio"] == 2.0 and not d["steps"][0]["ratio_infinite"]
