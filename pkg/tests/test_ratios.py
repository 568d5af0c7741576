import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonsubmax.core import CoverageFunction, ModularFunction, TableFunction
from nonsubmax.errors import DegenerateBudgetError, MissingReferenceError, SizeLimitError
from nonsubmax.greedy import general_greedy, parallel_greedy
from nonsubmax.oracle import brute_force_opt
from nonsubmax.ratios import (
    GuaranteeInputs,
    constraint_curvatures,
    exact_ratios,
    function_table,
    greedy_choice_ratios,
    greedy_submodularity_ratio,
    guarantee_inputs,
    matroid_bound,
    ratios_from_table,
    remark1_bound,
    remark2_bound,
    theorem1_bound,
    theorem2_bound,
)
from nonsubmax.synthetic import make_rng, random_coverage, random_instance, random_monotone_table

from oracles import naive_ratios

E1 = 0.5 * (1 - math.exp(-1))


def test_modular_ratios():
    r = exact_ratios(ModularFunction({0: 1.0, 1: 2.5, 2: 0.3}))
    assert (r.gamma, r.kappa, r.alpha, r.alpha_ext) == (1.0, 1.0, 0.0, 0.0)


def test_coverage_ratios():
    r = exact_ratios(CoverageFunction({0: [1, 2], 1: [2, 3]}))
    assert (r.gamma, r.kappa, r.alpha, r.alpha_ext) == (1.0, 1.0, 0.5, 0.5)
    A, B, v = r.witnesses["alpha"]
    assert B == [] and len(A) == 1 and v not in A


def _witness_value(f, name, A, B, v):
    A, B = sum(1 << q for q in A), sum(1 << q for q in B)
    if name == "gamma":
        num = sum(f(B | (1 << q)) - f(B) for q in range(64) if (A & ~B) >> q & 1)
        return num / (f(A | B) - f(B))
    ratio = (f(A | (1 << v)) - f(A)) / (f(B | (1 << v)) - f(B))
    return ratio if name == "kappa" else 1.0 - ratio


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_witnesses_attain_values(seed, k):
    f = TableFunction(range(k), random_monotone_table(make_rng(seed), k))
    r = exact_ratios(f)
    for name, (A, B, v) in r.witnesses.items():
        assert _witness_value(f, name, A, B, v) == pytest.approx(getattr(r, name), abs=1e-9)


def test_table_ratios():
    r = exact_ratios(TableFunction([0, 1], [0.0, 1.0, 1.0, 3.0]))
    assert r.gamma == pytest.approx(2 / 3, abs=1e-15)
    assert r.kappa == 0.5
    assert r.alpha == 0.0
    assert r.alpha_ext == 0.5
    assert r.witnesses["gamma"] == ([0, 1], [], None)
    a, b, v = r.witnesses["kappa"]
    assert a == [] and len(b) == 1 and v not in b


def test_size_limit():
    f = ModularFunction({k: 1.0 for k in range(13)})
    with pytest.raises(SizeLimitError):
        exact_ratios(f)
    assert exact_ratios(f, max_items=13).alpha == 0.0


def test_report_dict():
    d = exact_ratios(TableFunction([0, 1], [0.0, 1.0, 1.0, 3.0])).to_dict()
    assert d["method"] == "exact" and d["witnesses"]["kappa"]["v"] in (0, 1)


@given(st.integers(0, 10**6), st.integers(1, 6))
def test_fast_scan_matches_naive(seed, k):
    vals = random_monotone_table(make_rng(seed), k)
    r = ratios_from_table(np.array(vals))
    assert (r.gamma, r.kappa, r.alpha, r.alpha_ext) == naive_ratios(vals)


@given(st.integers(0, 10**6), st.integers(1, 7))
def test_sandwich(seed, k):
    r = ratios_from_table(np.array(random_monotone_table(make_rng(seed), k)))
    assert r.kappa <= r.gamma
    assert r.alpha <= r.alpha_ext
    for x in (r.gamma, r.kappa, r.alpha, r.alpha_ext):
        assert 0.0 <= x <= 1.0


@given(st.integers(0, 10**6), st.integers(1, 7))
def test_coverage_is_submodular(seed, k):
    f = random_coverage(make_rng(seed), range(k), weighted=True)
    vals = function_table(f, list(range(k)))
    r = ratios_from_table(vals)
    assert r.gamma == 1.0 and r.kappa == 1.0
    # diminishing returns by direct check agrees with kappa = 1
    dr = all(
        vals[A | (1 << v)] - vals[A] >= vals[B | (1 << v)] - vals[B] - 1e-12
        for B in range(1 << k)
        for A in range(1 << k)
        if A & ~B == 0
        for v in range(k)
        if not B >> v & 1
    )
    assert dr == (r.kappa == 1.0)


def test_table_is_not_diminishing():
    r = exact_ratios(TableFunction([0, 1], [0.0, 1.0, 1.0, 3.0]))
    assert r.kappa < 1.0


def test_gamma_tilde_example(two_block):
    _, traces = parallel_greedy(two_block)
    assert greedy_submodularity_ratio(two_block.objective, traces) == 1.0


def test_gamma_tilde_no_truncation():
    from conftest import budget_instance

    inst = budget_instance([["a", "b"]], {"a": 1, "b": 1}, [{"a": 1, "b": 1}], [5])
    _, traces = parallel_greedy(inst)
    assert greedy_submodularity_ratio(inst.objective, traces) == math.inf


@given(st.integers(0, 10**6))
def test_gamma_tilde_at_least_one_for_coverage(seed):
    inst = random_instance(make_rng(seed), objective_kind="coverage")
    _, traces = parallel_greedy(inst)
    loose = greedy_submodularity_ratio(inst.objective, traces, singleton="any")
    assert loose >= 1.0 - 1e-12
    assert greedy_submodularity_ratio(inst.objective, traces) <= loose


def test_psi_examples(one_budget):
    _, trace = general_greedy(one_budget)
    lb = greedy_choice_ratios(one_budget, trace, mode="lower-bound")
    assert lb[0] == 1.0
    assert lb[1] == pytest.approx(2 / 3, abs=1e-15)
    a = one_budget.ground.mask_of_labels(["a"])
    ex = greedy_choice_ratios(one_budget, trace, reference=a, mode="exact")
    assert ex[0] == pytest.approx(4 / 3, abs=1e-15)
    with pytest.raises(MissingReferenceError):
        greedy_choice_ratios(one_budget, trace)


@given(st.integers(0, 10**6), st.booleans())
def test_psi_lower_bound_below_exact(seed, disjoint):
    inst = random_instance(make_rng(seed), disjoint=disjoint)
    opt = brute_force_opt(inst).optimum
    _, trace = general_greedy(inst)
    lb = greedy_choice_ratios(inst, trace, mode="lower-bound")
    ex = greedy_choice_ratios(inst, trace, reference=opt)
    assert all(a <= b for a, b in zip(lb, ex))
    for j in range(trace.prefix_length):
        assert lb[j] >= 1.0
    rep = exact_ratios(inst.objective)
    curv = constraint_curvatures(inst)
    b_lb = theorem2_bound(guarantee_inputs(inst, rep, curv, general_trace=trace, psi_mode="lower-bound"))
    b_ex = theorem2_bound(guarantee_inputs(inst, rep, curv, general_trace=trace, reference=opt))
    assert b_lb[0] <= b_ex[0] and b_lb[1] <= b_ex[1]


def _inputs(**kw):
    base = dict(gamma_f=1.0, kappa_f=1.0, alpha_f=0.0, alpha_tilde=(0.0,), budgets=(2.0,), gamma_tilde_f=1.0)
    base.update(kw)
    return GuaranteeInputs(**base)


def test_theorem1_examples():
    assert theorem1_bound(_inputs(gamma_f=0.0)) == 0.0
    assert theorem1_bound(_inputs()) == pytest.approx(E1, abs=1e-15)
    assert theorem1_bound(_inputs(alpha_tilde=(0.0, 1.0), budgets=(1.0, 1.0))) == 0.0
    assert theorem1_bound(_inputs(gamma_tilde_f=math.inf)) == pytest.approx(E1, abs=1e-15)


def test_theorem1_single_block_has_no_merge_factor():
    one = _inputs(alpha_f=0.5, kappa_f=0.5)
    assert theorem1_bound(one) == remark1_bound(one) == pytest.approx(E1, abs=1e-15)
    two = _inputs(alpha_f=0.5, kappa_f=0.5, alpha_tilde=(0.0, 0.0), budgets=(1.0, 1.0))
    assert theorem1_bound(two) == pytest.approx(0.25 * E1, abs=1e-15)


def test_theorem2_examples():
    B, tight, exp = theorem2_bound(_inputs(psi=(1.0, 2 / 3), constraint_marginals=(1.0, 1.0)))
    assert B == pytest.approx(5 / 6, abs=1e-15)
    assert tight == pytest.approx(95 / 144, abs=1e-15)
    assert tight >= exp
    assert theorem2_bound(_inputs()) == (0.0, 0.0, 0.0)
    _, tight, _ = theorem2_bound(_inputs(psi=(2.0, 2.0), constraint_marginals=(1.0, 1.0), budgets=(2.0,)))
    assert tight == 1.0
    with pytest.raises(DegenerateBudgetError):
        theorem2_bound(_inputs(psi=(1.0,), constraint_marginals=(1.0,), budgets=(0.0,)))


def test_remark_and_matroid_examples():
    assert matroid_bound(_inputs(budgets=(4.0,), prefix_length=4)) == pytest.approx(1 - 0.75**4, abs=1e-15)
    B, _, exp = remark2_bound(_inputs(budgets=(1.0, 2.0), prefix_loads=(1.0, 2.0), prefix_length=2))
    assert B == 1.0 and exp == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert remark1_bound(_inputs()) == pytest.approx(E1, abs=1e-15)
    assert remark2_bound(_inputs()) == (0.0, 0.0, 0.0)


grid = st.floats(0.0, 1.0)


@given(grid, grid, grid, st.floats(0.0, 0.05))
def test_bounds_monotone_in_parameters(g, a, at, h):
    psi = dict(psi=(1.0, 0.7, 1.3), constraint_marginals=(0.5, 1.0, 0.2), budgets=(1.0, 2.0))
    base = _inputs(gamma_f=g, alpha_f=a, alpha_tilde=(at, 0.3), **psi)
    up_g = _inputs(gamma_f=min(1.0, g + h), alpha_f=a, alpha_tilde=(at, 0.3), **psi)
    up_a = _inputs(gamma_f=g, alpha_f=min(1.0, a + h), alpha_tilde=(at, 0.3), **psi)
    up_t = _inputs(gamma_f=g, alpha_f=a, alpha_tilde=(min(1.0, at + h), 0.3), **psi)
    for fn in (theorem1_bound, lambda x: theorem2_bound(x)[1], lambda x: theorem2_bound(x)[2]):
        assert fn(up_g) >= fn(base) - 1e-15
        assert fn(up_a) <= fn(base) + 1e-15
        assert fn(up_t) <= fn(base) + 1e-15


@given(st.integers(0, 10**6))
def test_guarantees_hold(seed):
    rng = make_rng(seed)
    inst = random_instance(rng, disjoint=bool(seed % 2))
    opt = brute_force_opt(inst)
    rep = exact_ratios(inst.objective)
    curv = constraint_curvatures(inst)
    f = inst.objective
    sol, trace = general_greedy(inst)
    _, tight, exp = theorem2_bound(guarantee_inputs(inst, rep, curv, general_trace=trace, reference=opt.optimum))
    assert f(sol) >= tight * opt.value - 1e-9
    assert tight >= exp - 1e-15
    if inst.disjoint_blocks:
        sol, traces = parallel_greedy(inst)
        b = theorem1_bound(guarantee_inputs(inst, rep, curv, block_traces=traces))
        assert f(sol) >= b * opt.value - 1e-9


def test_inputs_dict_marks_infinity():
    d = _inputs(gamma_tilde_f=math.inf, psi=(math.inf, 1.0)).to_dict()
    assert d["gamma_tilde_f"] is None and d["gamma_tilde_f_infinite"]
    assert d["psi"] == [None, 1.0] and d["psi_infinite"] == [True, False]
