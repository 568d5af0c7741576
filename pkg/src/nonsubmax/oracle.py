"""Exhaustive solver for small instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .core import ProblemInstance, is_feasible
from .errors import SizeLimitError

MAX_ORACLE_ITEMS = 20

#: Values within this relative distance of the optimum count as ties.
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class OracleResult:
    optimum: int
    value: float
    enumerated: int
    ties: int


def _check_size(instance: ProblemInstance, limit: int) -> None:
    if instance.size > limit:
        raise SizeLimitError(f"exhaustive search limited to {limit} items, got {instance.size}")


def exhaustive_feasible(instance: ProblemInstance, prune: bool = True, limit: int = MAX_ORACLE_ITEMS) -> Iterator[int]:
    """Every feasible subset once, in lexicographic order of sorted item lists.

    With ``prune`` the extensions of an infeasible set are skipped, which is
    exact because monotone constraint functions make feasibility
    downward closed.
    """
    _check_size(instance, limit)
    n = instance.size
    stack = [(0, 0)]
    while stack:
        mask, start = stack.pop()
        feasible = is_feasible(instance, mask)
        if feasible:
            yield mask
        if not feasible and prune:
            continue
        for v in range(n - 1, start - 1, -1):
            stack.append((mask | (1 << v), v + 1))


def brute_force_opt(instance: ProblemInstance, prune: bool = True, limit: int = MAX_ORACLE_ITEMS) -> OracleResult:
    """First optimum in lexicographic order, with the number of near-tied optima."""
    f = instance.objective
    best_mask, best_val = 0, -1.0
    values = []
    for mask in exhaustive_feasible(instance, prune, limit):
        val = f(mask)
        values.append(val)
        if val > best_val:
            best_mask, best_val = mask, val
    tol = TIE_RTOL * max(1.0, abs(best_val))
    ties = sum(1 for v in values if abs(v - best_val) <= tol)
    return OracleResult(best_mask, best_val, len(values), ties)
