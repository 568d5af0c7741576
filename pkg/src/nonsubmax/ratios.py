"""Submodularity ratios, curvatures and the greedy approximation guarantees.

:func:`exact_ratios` tabulates a set function on all subsets of at most
``MAX_EXACT_ITEMS`` items and scans every quantifier range exactly.  The scan
reduces each pairwise search to one-dimensional extremes (subset maxima via
a sum-over-subsets sweep, per-set numerator sums via doubling), which gives
the same floating point values as a naive four-loop scan because correctly
rounded division is monotone in each argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ProblemInstance, SetFunction, constraint_marginal, iter_bits, marginal_gain, to_mask
from .errors import DegenerateBudgetError, MissingReferenceError, SizeLimitError
from .greedy import BlockTrace, GeneralTrace, greedy_ratio

MAX_EXACT_ITEMS = 12

#: Pairs whose denominator does not exceed this are skipped.
DENOM_TOL = 1e-12

#: Results within this distance of 0 or 1 are snapped onto that value,
#: absorbing rounding in differences of sums.
CLAMP_TOL = 1e-9


def _clamp(x: float) -> float:
    if abs(x) <= CLAMP_TOL:
        return 0.0
    if abs(x - 1.0) <= CLAMP_TOL:
        return 1.0
    return x


@dataclass
class RatioReport:
    """Submodularity ratio, DR ratio, curvature and extended curvature of one function.

    ``witnesses`` maps each quantity name to the ``(A, B, v)`` triple (item
    lists, ``v`` an item or ``None``) that attains it; a quantity missing from
    the map took its default because no pair had a positive denominator.
    """

    gamma: float
    kappa: float
    alpha: float
    alpha_ext: float
    method: str = "exact"
    witnesses: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "kappa": self.kappa,
            "alpha": self.alpha,
            "alpha_ext": self.alpha_ext,
            "method": self.method,
            "witnesses": {k: {"A": a, "B": b, "v": v} for k, (a, b, v) in self.witnesses.items()},
        }


def function_table(f: SetFunction, items: Sequence[int]) -> np.ndarray:
    """Values of ``f`` on every subset of ``items``, indexed by local bitmask."""
    k = len(items)
    globals_ = [0] * (1 << k)
    for p, item in enumerate(items):
        bit = 1 << item
        half = 1 << p
        for j in range(half):
            globals_[half + j] = globals_[j] | bit
    return np.array([f(m) for m in globals_], dtype=float)


def _sos(arr: np.ndarray, k: int, skip: int, op) -> np.ndarray:
    """Extreme of ``arr`` over all subsets of each mask, ignoring bit ``skip``."""
    out = arr.copy()
    for b in range(k):
        if b == skip:
            continue
        view = out.reshape(-1, 2, 1 << b)
        view[:, 1, :] = op(view[:, 1, :], view[:, 0, :])
    return out


def ratios_from_table(vals: np.ndarray, items: Optional[Sequence[int]] = None) -> RatioReport:
    """Exact ratios of the set function tabulated in ``vals`` (length ``2^k``)."""
    vals = np.asarray(vals, dtype=float)
    N = vals.shape[0]
    k = N.bit_length() - 1
    if 1 << k != N:
        raise ValueError("table length must be a power of two")
    items = list(range(k)) if items is None else list(items)

    def as_items(local: int) -> list[int]:
        return [items[p] for p in iter_bits(int(local))]

    idx = np.arange(N)
    marg = np.empty((k, N))
    has = np.empty((k, N), dtype=bool)
    for v in range(k):
        bit = 1 << v
        has[v] = (idx & bit) != 0
        marg[v] = vals[idx | bit] - vals[idx]
    witnesses: dict = {}

    # extended curvature: arbitrary A, B not containing v
    alpha_ext, best = -math.inf, None
    for v in range(k):
        ok = ~has[v]
        pos = ok & (marg[v] > DENOM_TOL)
        if not pos.any():
            continue
        dens = np.where(pos, marg[v], -np.inf)
        b_max = int(np.argmax(dens))
        b_min = int(np.argmin(np.where(pos, marg[v], np.inf)))
        nums = marg[v]
        cand = np.where(nums >= 0, 1.0 - nums / marg[v][b_max], 1.0 - nums / marg[v][b_min])
        cand = np.where(ok, cand, -np.inf)
        a = int(np.argmax(cand))
        if cand[a] > alpha_ext:
            alpha_ext = float(cand[a])
            best = (a, b_max if nums[a] >= 0 else b_min, v)
    if best is None:
        alpha_ext = 0.0
    else:
        witnesses["alpha_ext"] = (as_items(best[0]), as_items(best[1]), items[best[2]])

    # curvature: B subset of A, v outside A
    alpha, best = -math.inf, None
    for v in range(k):
        ok = ~has[v]
        pos = ok & (marg[v] > DENOM_TOL)
        if not pos.any():
            continue
        sub_max = _sos(np.where(pos, marg[v], -np.inf), k, v, np.maximum)
        sub_min = _sos(np.where(pos, marg[v], np.inf), k, v, np.minimum)
        nums = marg[v]
        with np.errstate(invalid="ignore", divide="ignore"):
            cand = np.where(nums >= 0, 1.0 - nums / sub_max, 1.0 - nums / sub_min)
        cand = np.where(ok & np.isfinite(sub_max), cand, -np.inf)
        a = int(np.argmax(cand))
        if cand[a] > alpha:
            alpha = float(cand[a])
            target = sub_max[a] if nums[a] >= 0 else sub_min[a]
            b = next(s for s in range(N) if s & ~a == 0 and pos[s] and marg[v][s] == target)
            best = (a, b, v)
    if best is None:
        alpha = 0.0
    else:
        witnesses["alpha"] = (as_items(best[0]), as_items(best[1]), items[best[2]])

    # DR ratio: A subset of B, v outside B
    kappa, best = math.inf, None
    for v in range(k):
        ok = ~has[v]
        pos = ok & (marg[v] > DENOM_TOL)
        if not pos.any():
            continue
        sub_min = _sos(np.where(ok, marg[v], np.inf), k, v, np.minimum)
        with np.errstate(invalid="ignore"):
            cand = np.where(pos, sub_min / np.where(pos, marg[v], 1.0), np.inf)
        b = int(np.argmin(cand))
        if cand[b] < kappa:
            kappa = float(cand[b])
            a = next(s for s in range(N) if s & ~b == 0 and marg[v][s] == sub_min[b])
            best = (a, b, v)
    if best is None:
        kappa = 1.0
    else:
        witnesses["kappa"] = (as_items(best[0]), as_items(best[1]), items[best[2]])

    # submodularity ratio: only D = A \ B matters
    gamma, best = math.inf, None
    for B in range(N):
        num = np.zeros(1)
        for v in range(k):
            num = np.concatenate([num, num + marg[v][B]])
        den = vals[B | idx] - vals[B]
        valid = ((idx & B) == 0) & (idx != 0) & (den > DENOM_TOL)
        if not valid.any():
            continue
        with np.errstate(invalid="ignore", divide="ignore"):
            cand = np.where(valid, num / den, np.inf)
        d = int(np.argmin(cand))
        if cand[d] < gamma:
            gamma = float(cand[d])
            best = (d, B)
    if best is None:
        gamma = 1.0
    else:
        witnesses["gamma"] = (as_items(best[0]), as_items(best[1]), None)

    return RatioReport(_clamp(gamma), _clamp(kappa), _clamp(alpha), _clamp(alpha_ext), "exact", witnesses)


def exact_ratios(f: SetFunction, items: Optional[Sequence[int]] = None, max_items: int = MAX_EXACT_ITEMS) -> RatioReport:
    """Exact ratios of ``f`` restricted to subsets of ``items`` (default: its domain)."""
    items = list(f.domain if items is None else items)
    if len(items) > max_items:
        raise SizeLimitError(f"exact ratios limited to {max_items} items, got {len(items)}")
    return ratios_from_table(function_table(f, items), items)


def constraint_curvatures(instance: ProblemInstance, max_items: int = MAX_EXACT_ITEMS) -> list[float]:
    """Exact extended curvature of each constraint function on its scope."""
    return [exact_ratios(c.h, list(iter_bits(c.scope)), max_items).alpha_ext for c in instance.constraints]


def greedy_submodularity_ratio(f: SetFunction, traces: Sequence[BlockTrace], singleton: str = "feasible") -> float:
    """Smallest ratio of best-singleton value to the first truncated gain; ``inf`` if no block truncated.

    ``singleton="feasible"`` uses the best singleton that fits the block's
    budget (the one the parallel greedy may return); ``"any"`` uses the best
    singleton regardless of cost.
    """
    if singleton not in ("feasible", "any"):
        raise ValueError(f"unknown singleton rule {singleton!r}")
    out = math.inf
    for t in traces:
        if t.first_rejected is None:
            continue
        prefix = to_mask(t.accepted[: t.truncation_index])
        den = f(prefix | (1 << t.first_rejected)) - f(prefix)
        if not den > DENOM_TOL:
            continue
        best = t.best_singleton if singleton == "feasible" else t.best_singleton_unrestricted
        top = 0.0 if best is None else f(1 << best)
        out = min(out, top / den)
    return out


def _best_pair_ratio(instance: ProblemInstance, current: int, candidates: int) -> float:
    f = instance.objective
    best = 0.0
    for v in iter_bits(candidates):
        gain = marginal_gain(f, current, 1 << v)
        for i in instance.constraints_of(v):
            cost = constraint_marginal(instance.constraints[i], current, 1 << v)
            best = max(best, greedy_ratio(gain, cost))
    return best


def greedy_choice_ratios(
    instance: ProblemInstance,
    trace: GeneralTrace,
    reference: Optional[int] = None,
    mode: str = "exact",
) -> list[float]:
    """How close each accepted choice was to the best ratio among the candidates.

    ``mode="exact"`` compares against the items of ``reference`` (an optimal
    solution) not yet chosen; ``mode="lower-bound"`` compares against every
    item not yet chosen, which can only lower the result.  A candidate whose
    cost increase is zero while its gain is positive counts as an infinite
    ratio.  ``inf`` marks steps where no candidate has a positive gain.
    """
    if mode not in ("exact", "lower-bound"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and reference is None:
        raise MissingReferenceError("exact greedy choice ratios need the optimal set")
    universe = to_mask(reference) if mode == "exact" else (1 << instance.size) - 1
    items = trace.items
    out = []
    current = 0
    for j, (q, i_j, _) in enumerate(trace.accepted):
        chosen = greedy_ratio(trace.objective_marginals[j], trace.constraint_marginals[j])
        best = _best_pair_ratio(instance, current, universe & ~current)
        if best == 0.0:
            psi = math.inf
        elif math.isinf(best):
            psi = 1.0 if math.isinf(chosen) else 0.0
        else:
            psi = chosen / best
        out.append(psi)
        current |= 1 << items[j]
    return out


@dataclass
class GuaranteeInputs:
    """Everything the guarantee formulas consume.

    ``gamma_tilde_f`` may be ``inf`` and entries of ``psi`` may be ``inf``.
    """

    gamma_f: float
    kappa_f: float
    alpha_f: float
    alpha_tilde: tuple[float, ...]
    budgets: tuple[float, ...]
    gamma_tilde_f: float = math.inf
    psi: tuple[float, ...] = ()
    constraint_marginals: tuple[float, ...] = ()
    prefix_length: int = 0
    prefix_loads: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        def num(x):
            return None if math.isinf(x) else x

        return {
            "gamma_f": self.gamma_f,
            "kappa_f": self.kappa_f,
            "alpha_f": self.alpha_f,
            "gamma_tilde_f": num(self.gamma_tilde_f),
            "gamma_tilde_f_infinite": math.isinf(self.gamma_tilde_f),
            "alpha_tilde": list(self.alpha_tilde),
            "budgets": list(self.budgets),
            "psi": [num(p) for p in self.psi],
            "psi_infinite": [math.isinf(p) for p in self.psi],
            "constraint_marginals": list(self.constraint_marginals),
            "prefix_length": self.prefix_length,
            "prefix_loads": list(self.prefix_loads),
        }


def guarantee_inputs(
    instance: ProblemInstance,
    objective: RatioReport,
    alpha_tilde: Sequence[float],
    *,
    block_traces: Optional[Sequence[BlockTrace]] = None,
    general_trace: Optional[GeneralTrace] = None,
    reference: Optional[int] = None,
    psi_mode: str = "exact",
) -> GuaranteeInputs:
    inp = GuaranteeInputs(
        gamma_f=objective.gamma,
        kappa_f=objective.kappa,
        alpha_f=objective.alpha,
        alpha_tilde=tuple(alpha_tilde),
        budgets=instance.budgets,
    )
    if block_traces is not None:
        inp.gamma_tilde_f = greedy_submodularity_ratio(instance.objective, block_traces)
    if general_trace is not None:
        inp.psi = tuple(greedy_choice_ratios(instance, general_trace, reference, psi_mode))
        inp.constraint_marginals = tuple(general_trace.constraint_marginals)
        inp.prefix_length = general_trace.prefix_length
        prefix = to_mask(general_trace.items[: general_trace.prefix_length])
        inp.prefix_loads = tuple(c.load(prefix) for c in instance.constraints)
    return inp


def _curvature_term(inp: GuaranteeInputs) -> float:
    return min(1.0 - math.exp(-(1.0 - a) * inp.gamma_f) for a in inp.alpha_tilde)


def theorem1_bound(inp: GuaranteeInputs) -> float:
    """Guarantee of the parallel greedy.

    The ``(1 - alpha_f) kappa_f`` factor pays for merging the per-block
    solutions, so it is dropped when there is a single block.
    """
    if len(inp.alpha_tilde) == 1:
        return remark1_bound(inp)
    lead = (1.0 - inp.alpha_f) * inp.kappa_f * min(1.0, inp.gamma_tilde_f) / 2.0
    return lead * _curvature_term(inp)


def remark1_bound(inp: GuaranteeInputs) -> float:
    """Parallel greedy guarantee when the objective is additive across blocks."""
    return min(1.0, inp.gamma_tilde_f) / 2.0 * _curvature_term(inp)


def _tight(B: float, k: int) -> float:
    if k == 0:
        return 0.0
    x = min(B / k, 1.0)
    return 1.0 - (1.0 - x) ** k


def _scaled(inp: GuaranteeInputs, total: float) -> float:
    H = sum(inp.budgets)
    if H <= 0.0:
        raise DegenerateBudgetError("budgets sum to zero")
    factor = (1.0 - min(inp.alpha_tilde)) * inp.gamma_f / H
    if factor == 0.0 or total == 0.0:
        return 0.0
    return factor * total


def theorem2_bound(inp: GuaranteeInputs) -> tuple[float, float, float]:
    """``(B, 1 - (1 - B/k)^k, 1 - exp(-B))`` for the general greedy with ``k`` accepted items.

    ``B / k`` is capped at one, where the first form reaches its maximum.
    """
    k = len(inp.psi)
    if k == 0:
        return 0.0, 0.0, 0.0
    total = 0.0
    for psi, d in zip(inp.psi, inp.constraint_marginals):
        if d != 0.0:
            total += psi * d
    B = _scaled(inp, total)
    return B, _tight(B, k), 1.0 - math.exp(-B)


def remark2_bound(inp: GuaranteeInputs) -> tuple[float, float, float]:
    """Same two forms driven by the budget consumed by the rejection-free prefix."""
    k = inp.prefix_length
    if k == 0:
        return 0.0, 0.0, 0.0
    B = _scaled(inp, sum(inp.prefix_loads))
    return B, _tight(B, k), 1.0 - math.exp(-B)


def matroid_bound(inp: GuaranteeInputs) -> float:
    """Partition matroid form ``1 - (1 - gamma_f / sum H)^l``."""
    H = sum(inp.budgets)
    if H <= 0.0:
        raise DegenerateBudgetError("budgets sum to zero")
    return 1.0 - (1.0 - inp.gamma_f / H) ** inp.prefix_length
