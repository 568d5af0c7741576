import sys
from pathlib import Path

import pytest
from hypothesis import settings

from nonsubmax.core import ConstraintSpec, GroundSet, ModularFunction, ProblemInstance

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def budget_instance(blocks, weights, costs, budgets, disjoint=True):
    """Modular objective with one modular budget per block; dicts keyed by label."""
    g = GroundSet.from_blocks(blocks)
    lab = {l: k for k, l in enumerate(g.labels)}
    f = ModularFunction({lab[l]: w for l, w in weights.items()})
    cons = []
    for i, (cost, H) in enumerate(zip(costs, budgets)):
        h = ModularFunction({lab[l]: c for l, c in cost.items()})
        cons.append(ConstraintSpec(h, g.block_mask(i), H, i))
    return ProblemInstance(g, f, cons, disjoint)


@pytest.fixture
def two_block():
    # blocks {a,b} and {c}; greedy in block 0 picks b, rejects a, then swaps to {a}
    return budget_instance(
        [["a", "b"], ["c"]],
        {"a": 3, "b": 2, "c": 5},
        [{"a": 2, "b": 1}, {"c": 1}],
        [2, 1],
    )


@pytest.fixture
def one_budget():
    return budget_instance([["a", "b", "c"]], {"a": 3, "b": 2, "c": 1}, [{"a": 2, "b": 1, "c": 1}], [2])


def pytest_terminal_summary(terminalreporter):
    import report

    if report.LINES:
        terminalreporter.section("acceptance")
        for line in report.LINES:
            terminalreporter.write_line(line)
