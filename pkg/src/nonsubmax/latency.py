"""Latency of sequential transmission over one shared channel.

Each selected element first computes for ``c[v]`` time units (all in
parallel, starting at time zero) and then transmits for ``t[v]`` units on
the channel, one element at a time.  Elements are addressed by their local
position ``0..m-1`` in the profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import SetFunction, Subset, iter_bits, mask_items, to_mask
from .errors import InvalidElementError, InvalidSequenceError, PreconditionError


@dataclass(frozen=True)
class LatencyProfile:
    c: tuple[float, ...]
    t: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        object.__setattr__(self, "t", tuple(float(x) for x in self.t))
        if len(self.c) != len(self.t):
            raise InvalidElementError("c and t must have the same length")
        if any(x < 0 for x in self.c):
            raise InvalidElementError("compute latencies must be nonnegative")
        if any(not x > 0 for x in self.t):
            raise InvalidElementError("transmit latencies must be positive")

    def __len__(self) -> int:
        return len(self.c)


def seq_latency(sequence: Sequence[int], profile: LatencyProfile) -> float:
    """Completion time of the last transmission when elements go in ``sequence`` order."""
    if len(set(sequence)) != len(sequence):
        raise InvalidSequenceError(f"sequence {list(sequence)} repeats an element")
    total = 0.0
    for v in sequence:
        c, t = profile.c[v], profile.t[v]
        if c < total:
            total = total + t
        else:
            total = c + t
    return total


def sorted_order(subset: Subset, profile: LatencyProfile) -> list[int]:
    """Elements by nondecreasing compute latency, ties by index."""
    return sorted(mask_items(to_mask(subset)), key=lambda v: (profile.c[v], v))


def h_c(subset: Subset, profile: LatencyProfile) -> float:
    """Total latency when elements transmit in order of compute latency."""
    mask = to_mask(subset)
    if mask >> len(profile):
        raise InvalidElementError(f"elements {mask_items(mask >> len(profile) << len(profile))} not in a profile of size {len(profile)}")
    return seq_latency(sorted_order(mask, profile), profile)


@dataclass(frozen=True)
class SlackReport:
    r: tuple[float, ...]
    satisfied: bool
    violating: tuple[int, ...]


def check_assumption3(profile: LatencyProfile) -> SlackReport:
    """Tightest slack ``r_v = min_{u: c_u >= c_v} (c_v + t_v - c_u)`` per element."""
    r = []
    for v in range(len(profile)):
        cv = profile.c[v]
        worst = max(cu for cu in profile.c if cu >= cv)
        r.append(cv + profile.t[v] - worst)
    violating = tuple(v for v, x in enumerate(r) if not x > 0)
    return SlackReport(tuple(r), not violating, violating)


def prop2_curvature_bound(profile: LatencyProfile) -> float:
    """Upper bound ``1 - min_v r_v / t_v`` on the extended curvature of :func:`h_c`."""
    report = check_assumption3(profile)
    if not report.satisfied:
        raise PreconditionError(f"compute latency dominates transmission for elements {list(report.violating)}")
    if not len(profile):
        return 0.0
    return 1.0 - min(rv / tv for rv, tv in zip(report.r, profile.t))


def latency_curvature_bound(profile: LatencyProfile) -> float:
    """Upper bound ``1 - min_v r_v / (c_v + t_v)`` on the extended curvature of :func:`h_c`.

    Unlike :func:`prop2_curvature_bound` this also covers marginals taken at
    the empty set, where adding ``v`` costs ``c_v + t_v`` rather than at most
    ``t_v``.
    """
    report = check_assumption3(profile)
    if not report.satisfied:
        raise PreconditionError(f"compute latency dominates transmission for elements {list(report.violating)}")
    if not len(profile):
        return 0.0
    return 1.0 - min(rv / (cv + tv) for rv, cv, tv in zip(report.r, profile.c, profile.t))


class LatencyFunction(SetFunction):
    """:func:`h_c` lifted to global item indices ``items`` (aligned with the profile)."""

    kind = "latency"

    def __init__(self, items: Iterable[int], profile: LatencyProfile, cache: bool = True):
        items = [int(k) for k in items]
        if len(items) != len(profile):
            raise InvalidElementError(f"{len(items)} items but profile has {len(profile)} entries")
        super().__init__(items, cache)
        self.items = tuple(items)
        self.profile = profile
        self._pos = {k: p for p, k in enumerate(items)}

    def _value(self, mask: int) -> float:
        local = [self._pos[k] for k in iter_bits(mask)]
        return h_c(local, self.profile)
