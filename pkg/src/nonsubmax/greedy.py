"""Ratio greedy solvers.

Both solvers repeatedly pick the candidate with the largest ratio of
objective gain to constraint-cost increase, keep it if the solution stays
feasible, and discard it from the candidate pool either way.
:func:`parallel_greedy` handles each block with its own constraint
independently and then compares against the best single element;
:func:`general_greedy` works on the whole ground set and maximizes over
(element, constraint) pairs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    ProblemInstance,
    constraint_marginal,
    is_feasible,
    iter_bits,
    marginal_gain,
    to_mask,
)
from .errors import UnsupportedStructureError

BUDGET_VIOLATION = "budget-violation"


def greedy_ratio(objective_gain: float, cost_increase: float) -> float:
    """Gain per unit cost; a free positive gain is infinitely attractive."""
    if cost_increase > 0.0:
        return objective_gain / cost_increase
    return math.inf if objective_gain > 0.0 else 0.0


@dataclass(frozen=True)
class Step:
    step: int
    candidate: int
    ratio: float
    objective_marginal: float
    constraint_marginal: float
    constraint_index: int
    accepted: bool


def _better(ratio: float, gain: float, best_ratio: float, best_gain: float) -> bool:
    if ratio > best_ratio:
        return True
    return ratio == best_ratio == math.inf and gain > best_gain


@dataclass
class BlockTrace:
    """Decision record of one block of :func:`parallel_greedy`.

    ``accepted`` is the while-loop solution in insertion order.
    ``truncation_index`` counts the additions made before the first rejection
    and ``first_rejected`` is that rejected candidate (``None`` if the loop never
    rejected anything).  ``best_singleton`` is the best single element that
    satisfies the block budget; ``final_choice`` says which of the two
    candidate solutions the block returned.
    """

    block: int
    steps: list[Step] = field(default_factory=list)
    accepted: list[int] = field(default_factory=list)
    rejected: list[tuple[int, str]] = field(default_factory=list)
    truncation_index: int = 0
    first_rejected: Optional[int] = None
    best_singleton: Optional[int] = None
    best_singleton_unrestricted: Optional[int] = None
    final_choice: str = "greedy"
    solution: int = 0


@dataclass
class GeneralTrace:
    """Decision record of :func:`general_greedy`.

    ``accepted`` holds ``(item, constraint index, ratio)`` in insertion order
    and ``constraint_marginals[j]`` the cost increase of the ``j``-th accepted
    item under its chosen constraint.  ``prefix_length`` counts additions
    made before the first rejection.
    """

    steps: list[Step] = field(default_factory=list)
    accepted: list[tuple[int, int, float]] = field(default_factory=list)
    objective_marginals: list[float] = field(default_factory=list)
    constraint_marginals: list[float] = field(default_factory=list)
    rejected: list[tuple[int, float, str]] = field(default_factory=list)
    prefix_length: int = 0

    @property
    def items(self) -> list[int]:
        return [q for q, _, _ in self.accepted]


def _check_parallel_structure(instance: ProblemInstance) -> None:
    if not instance.disjoint_blocks:
        raise UnsupportedStructureError("parallel greedy requires disjoint blocks")
    ground = instance.ground
    if len(instance.constraints) != ground.n:
        raise UnsupportedStructureError("parallel greedy needs exactly one constraint per block")
    seen = 0
    for i, c in enumerate(instance.constraints):
        if c.scope != ground.block_mask(i):
            raise UnsupportedStructureError(f"constraint {i} does not cover exactly block {i}")
        if seen & c.scope:
            raise UnsupportedStructureError("block scopes overlap")
        seen |= c.scope


def _run_block(instance: ProblemInstance, i: int) -> BlockTrace:
    f = instance.objective
    con = instance.constraints[i]
    block = list(iter_bits(con.scope))
    trace = BlockTrace(block=i)

    best_any = best_feasible = None
    for v in block:
        if best_any is None or f(1 << v) > f(1 << best_any):
            best_any = v
        if con.h(1 << v) <= con.budget and (best_feasible is None or f(1 << v) > f(1 << best_feasible)):
            best_feasible = v
    trace.best_singleton_unrestricted = best_any
    trace.best_singleton = best_feasible

    current = 0
    pool = list(block)
    truncated = False
    step = 0
    while pool:
        pick = None
        best_ratio = best_gain = best_cost = -math.inf
        for v in pool:
            gain = marginal_gain(f, current, 1 << v)
            cost = constraint_marginal(con, current, 1 << v)
            ratio = greedy_ratio(gain, cost)
            if pick is None or _better(ratio, gain, best_ratio, best_gain):
                pick, best_ratio, best_gain, best_cost = v, ratio, gain, cost
        ok = con.load(current | (1 << pick)) <= con.budget
        trace.steps.append(Step(step, pick, best_ratio, best_gain, best_cost, i, ok))
        if ok:
            current |= 1 << pick
            trace.accepted.append(pick)
            if not truncated:
                trace.truncation_index += 1
        else:
            trace.rejected.append((pick, BUDGET_VIOLATION))
            if not truncated:
                truncated = True
                trace.first_rejected = pick
        pool.remove(pick)
        step += 1

    trace.solution = current
    if best_feasible is not None and f(1 << best_feasible) > f(current):
        trace.final_choice = "singleton"
        trace.solution = 1 << best_feasible
    return trace


def parallel_greedy(instance: ProblemInstance, workers: int = 1) -> tuple[int, list[BlockTrace]]:
    """Per-block ratio greedy followed by the best-singleton comparison.

    Blocks are independent, so ``workers > 1`` runs them on a thread pool;
    the result does not depend on the number of workers.
    """
    _check_parallel_structure(instance)
    blocks = range(len(instance.constraints))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(lambda i: _run_block(instance, i), blocks))
    else:
        traces = [_run_block(instance, i) for i in blocks]
    solution = 0
    for t in traces:
        solution |= t.solution
    return solution, traces


def general_greedy(instance: ProblemInstance) -> tuple[int, GeneralTrace]:
    """Ratio greedy over (element, constraint) pairs on the whole ground set.

    Only constraints whose scope contains the element are paired with it.
    """
    f = instance.objective
    cons = instance.constraints
    trace = GeneralTrace()
    current = 0
    pool = list(range(instance.size))
    truncated = False
    step = 0
    while pool:
        pick = None
        pick_i = -1
        best_ratio = best_gain = best_cost = -math.inf
        for v in pool:
            gain = marginal_gain(f, current, 1 << v)
            for i in instance.constraints_of(v):
                cost = constraint_marginal(cons[i], current, 1 << v)
                ratio = greedy_ratio(gain, cost)
                if pick is None or _better(ratio, gain, best_ratio, best_gain):
                    pick, pick_i, best_ratio, best_gain, best_cost = v, i, ratio, gain, cost
        if pick is None:
            break
        ok = is_feasible(instance, current | (1 << pick))
        trace.steps.append(Step(step, pick, best_ratio, best_gain, best_cost, pick_i, ok))
        if ok:
            current |= 1 << pick
            trace.accepted.append((pick, pick_i, best_ratio))
            trace.objective_marginals.append(best_gain)
            trace.constraint_marginals.append(best_cost)
            if not truncated:
                trace.prefix_length += 1
        else:
            trace.rejected.append((pick, best_ratio, BUDGET_VIOLATION))
            truncated = True
        pool.remove(pick)
        step += 1
    return current, trace


def truncation_points(traces: list[BlockTrace]) -> list[tuple[int, Optional[int]]]:
    """``(l_i, first rejected candidate)`` per block."""
    return [(t.truncation_index, t.first_rejected) for t in traces]


def prefix_mask(items: list[int], j: int) -> int:
    return to_mask(items[:j])
