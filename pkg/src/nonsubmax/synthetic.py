"""Seeded random instances for tests and small-scale studies."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import (
    ConstraintSpec,
    CoverageFunction,
    GroundSet,
    ModularFunction,
    ProblemInstance,
    SetFunction,
    TableFunction,
    iter_bits,
)
from .latency import LatencyFunction, LatencyProfile


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an optional stream path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(stream))))


def random_monotone_table(rng: np.random.Generator, k: int, zero_prob: float = 0.2) -> list[float]:
    """Monotone values on ``2^k`` subsets, usually neither submodular nor supermodular."""
    vals = [0.0] * (1 << k)
    for mask in sorted(range(1, 1 << k), key=lambda m: (bin(m).count("1"), m)):
        base = max(vals[mask & ~(1 << v)] for v in iter_bits(mask))
        bump = 0.0 if rng.random() < zero_prob else float(rng.exponential(1.0))
        vals[mask] = base + bump
    return vals


def random_coverage(rng: np.random.Generator, items, universe: int = 8, weighted: bool = False) -> CoverageFunction:
    covers = {}
    for k in items:
        size = int(rng.integers(1, max(2, universe // 2) + 1))
        covers[k] = [int(u) for u in rng.choice(universe, size=size, replace=False)]
    weights = None
    if weighted:
        weights = {u: float(rng.uniform(0.5, 2.0)) for u in range(universe)}
    return CoverageFunction(covers, weights)


def random_objective(rng: np.random.Generator, size: int, kind: str) -> SetFunction:
    items = list(range(size))
    if kind == "modular":
        return ModularFunction({k: float(rng.uniform(0.1, 3.0)) for k in items})
    if kind == "coverage":
        return random_coverage(rng, items, universe=max(4, size + 2), weighted=bool(rng.random() < 0.5))
    if kind == "table":
        return TableFunction(items, random_monotone_table(rng, size))
    raise ValueError(f"unknown objective kind {kind!r}")


def random_profile(rng: np.random.Generator, m: int) -> LatencyProfile:
    return LatencyProfile(rng.uniform(0.0, 3.0, m).tolist(), rng.uniform(0.3, 3.0, m).tolist())


def random_constraint_function(rng: np.random.Generator, items: list[int], kind: str) -> SetFunction:
    if kind == "budget":
        return ModularFunction({k: float(rng.uniform(0.2, 2.0)) for k in items})
    if kind == "latency":
        return LatencyFunction(items, random_profile(rng, len(items)))
    raise ValueError(f"unknown constraint kind {kind!r}")


def random_blocks(rng: np.random.Generator, n: int, max_block: int, disjoint: bool) -> list[list[str]]:
    sizes = [int(rng.integers(1, max_block + 1)) for _ in range(n)]
    blocks: list[list[str]] = []
    count = 0
    for s in sizes:
        blocks.append([f"e{count + j}" for j in range(s)])
        count += s
    if not disjoint and n > 1:
        # share some labels with a later block
        for i in range(n):
            for lab in list(blocks[i]):
                if rng.random() < 0.35:
                    j = int(rng.integers(0, n))
                    if j != i and lab not in blocks[j] and len(blocks[j]) < max_block + 2:
                        blocks[j].append(lab)
    return blocks


def random_instance(
    rng: np.random.Generator,
    n_blocks: Optional[int] = None,
    max_block: int = 4,
    disjoint: bool = True,
    objective_kind: Optional[str] = None,
    constraint_kinds: tuple[str, ...] = ("budget", "latency"),
) -> ProblemInstance:
    """Small instance with a mixed objective and one budget/latency constraint per block.

    Budgets are a random fraction of each block's full cost, so some
    singletons may be infeasible.
    """
    n = int(rng.integers(1, 4)) if n_blocks is None else n_blocks
    ground = GroundSet.from_blocks(random_blocks(rng, n, max_block, disjoint))
    kind = objective_kind or str(rng.choice(["modular", "coverage", "table"]))
    objective = random_objective(rng, ground.size, kind)
    constraints = []
    for i, block in enumerate(ground.blocks):
        ckind = str(rng.choice(list(constraint_kinds)))
        h = random_constraint_function(rng, list(block), ckind)
        scope = ground.block_mask(i)
        budget = float(rng.uniform(0.2, 0.9)) * h(scope)
        constraints.append(ConstraintSpec(h, scope, budget, i))
    return ProblemInstance(ground, objective, constraints, disjoint)
