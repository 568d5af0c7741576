"""Ground sets, set functions, constraints and marginal returns.

Subsets of the ground set are encoded as Python ints used as bitmasks over
item indices ``0..N-1``.  Every public function that takes a subset also
accepts any iterable of item indices.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

from .errors import InvalidElementError, MonotonicityError

Subset = Union[int, Iterable[int]]

#: Marginals in ``[-MONOTONE_TOL * scale, 0)`` are treated as zero.
MONOTONE_TOL = 1e-12

#: Lookup-table set functions are limited to this many items.
TABLE_MAX_ITEMS = 20


def to_mask(subset: Subset) -> int:
    if isinstance(subset, int):
        if subset < 0:
            raise InvalidElementError("subset mask must be nonnegative")
        return subset
    mask = 0
    for item in subset:
        item = int(item)
        if item < 0:
            raise InvalidElementError(f"negative item index {item}")
        mask |= 1 << item
    return mask


def mask_items(mask: int) -> list[int]:
    """Item indices of ``mask`` in ascending order."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Element(NamedTuple):
    """A ground-set element addressed as (block, position within block)."""

    block: int
    local: int


@dataclass(frozen=True)
class GroundSet:
    """Blocks of item indices plus display labels.

    ``labels[k]`` names logical item ``k``.  A label listed in several blocks
    is one logical item shared by those blocks, which is how overlapping
    scopes are represented.
    """

    labels: tuple[str, ...]
    blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[Hashable]]) -> "GroundSet":
        index: dict[str, int] = {}
        out = []
        for block in blocks:
            row = []
            for label in block:
                key = str(label)
                if key not in index:
                    index[key] = len(index)
                if index[key] in row:
                    raise InvalidElementError(f"label {key!r} repeated inside one block")
                row.append(index[key])
            out.append(tuple(row))
        return cls(tuple(index), tuple(out))

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def block_mask(self, i: int) -> int:
        return to_mask(self.blocks[i])

    def is_disjoint(self) -> bool:
        seen = 0
        for i in range(self.n):
            m = self.block_mask(i)
            if seen & m:
                return False
            seen |= m
        return True

    def elements(self) -> list[Element]:
        """All (block, local) pairs in lexicographic order."""
        return [Element(b, j) for b, block in enumerate(self.blocks) for j in range(len(block))]

    def item_of(self, element: Element) -> int:
        try:
            return self.blocks[element.block][element.local]
        except IndexError:
            raise InvalidElementError(f"no element {tuple(element)}") from None

    def elements_of(self, item: int) -> list[Element]:
        return [Element(b, block.index(item)) for b, block in enumerate(self.blocks) if item in block]

    def mask_of_labels(self, labels: Iterable[Hashable]) -> int:
        lookup = {lab: k for k, lab in enumerate(self.labels)}
        mask = 0
        for lab in labels:
            try:
                mask |= 1 << lookup[str(lab)]
            except KeyError:
                raise InvalidElementError(f"unknown label {lab!r}") from None
        return mask

    def labels_of(self, subset: Subset) -> list[str]:
        return [self.labels[k] for k in mask_items(to_mask(subset))]


class SetFunction:
    """A memoized map from subsets of ``domain`` to nonnegative reals.

    Subclasses implement :meth:`_value` on a bitmask.  The cache is a plain
    dict; reads are lock free and insertions are serialized, so one instance
    can be shared between threads.
    """

    kind = "abstract"

    def __init__(self, domain: Iterable[int], cache: bool = True):
        self.domain = tuple(sorted(set(int(k) for k in domain)))
        self.domain_mask = to_mask(self.domain)
        self._cache: dict[int, float] | None = {} if cache else None
        self._lock = threading.Lock()

    def _value(self, mask: int) -> float:
        raise NotImplementedError

    def __call__(self, subset: Subset) -> float:
        mask = to_mask(subset)
        if mask & ~self.domain_mask:
            bad = mask_items(mask & ~self.domain_mask)
            raise InvalidElementError(f"items {bad} outside the domain of {self.kind} function")
        cache = self._cache
        if cache is None:
            return float(self._value(mask))
        try:
            return cache[mask]
        except KeyError:
            pass
        val = float(self._value(mask))
        with self._lock:
            cache.setdefault(mask, val)
        return val

    def clear_cache(self) -> None:
        if self._cache is not None:
            with self._lock:
                self._cache.clear()

    @property
    def cache_size(self) -> int:
        return 0 if self._cache is None else len(self._cache)


class ModularFunction(SetFunction):
    kind = "modular"

    def __init__(self, weights: Mapping[int, float], cache: bool = True):
        super().__init__(weights.keys(), cache)
        self.weights = {int(k): float(w) for k, w in weights.items()}

    def _value(self, mask: int) -> float:
        total = 0.0
        for k in iter_bits(mask):
            total += self.weights[k]
        return total


class CardinalityFunction(ModularFunction):
    kind = "cardinality"

    def __init__(self, items: Iterable[int], cache: bool = True):
        super().__init__({k: 1.0 for k in items}, cache)


class CoverageFunction(SetFunction):
    """Weighted size of the union of the sets covered by the chosen items."""

    kind = "coverage"

    def __init__(
        self,
        covers: Mapping[int, Iterable[Hashable]],
        weights: Mapping[Hashable, float] | None = None,
        cache: bool = True,
    ):
        super().__init__(covers.keys(), cache)
        self.covers = {int(k): frozenset(v) for k, v in covers.items()}
        self.weights = None if weights is None else dict(weights)

    def _value(self, mask: int) -> float:
        covered: set = set()
        for k in iter_bits(mask):
            covered |= self.covers[k]
        if self.weights is None:
            return float(len(covered))
        total = 0.0
        for u in sorted(covered, key=repr):
            total += self.weights.get(u, 1.0)
        return total


class TableFunction(SetFunction):
    """Explicit values for every subset of ``items``.

    ``values[j]`` is the value of the subset whose local bitmask (bit ``p``
    standing for ``items[p]``) equals ``j``.
    """

    kind = "table"

    def __init__(self, items: Sequence[int], values: Sequence[float], cache: bool = True):
        items = [int(k) for k in items]
        if len(items) > TABLE_MAX_ITEMS:
            raise InvalidElementError(f"table functions support at most {TABLE_MAX_ITEMS} items")
        if len(set(items)) != len(items):
            raise InvalidElementError("table items must be distinct")
        if len(values) != 1 << len(items):
            raise InvalidElementError(f"table over {len(items)} items needs {1 << len(items)} values, got {len(values)}")
        super().__init__(items, cache)
        self.items = tuple(items)
        self.values = tuple(float(v) for v in values)
        self._pos = {k: p for p, k in enumerate(items)}

    def local_index(self, mask: int) -> int:
        j = 0
        for k in iter_bits(mask):
            j |= 1 << self._pos[k]
        return j

    def _value(self, mask: int) -> float:
        return self.values[self.local_index(mask)]


@dataclass(frozen=True)
class ConstraintSpec:
    """``h(A & scope) <= budget``."""

    h: SetFunction
    scope: int
    budget: float
    block: int = 0

    def load(self, subset: Subset) -> float:
        return self.h(to_mask(subset) & self.scope)


@dataclass(frozen=True)
class ProblemInstance:
    ground: GroundSet
    objective: SetFunction
    constraints: tuple[ConstraintSpec, ...]
    disjoint_blocks: bool = True
    _by_item: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        by_item = [[] for _ in range(self.ground.size)]
        for i, c in enumerate(self.constraints):
            for k in iter_bits(c.scope):
                if k < len(by_item):
                    by_item[k].append(i)
        object.__setattr__(self, "_by_item", tuple(tuple(x) for x in by_item))

    @property
    def size(self) -> int:
        return self.ground.size

    def constraints_of(self, item: int) -> tuple[int, ...]:
        """Indices of the constraints whose scope contains ``item``."""
        return self._by_item[item]

    @property
    def budgets(self) -> tuple[float, ...]:
        return tuple(c.budget for c in self.constraints)

    def clear_caches(self) -> None:
        self.objective.clear_cache()
        for c in self.constraints:
            c.h.clear_cache()


def evaluate(f: SetFunction, subset: Subset) -> float:
    return f(subset)


def _guarded_difference(upper: float, lower: float) -> float:
    d = upper - lower
    if d < 0.0:
        scale = max(1.0, abs(upper), abs(lower))
        if d < -MONOTONE_TOL * scale:
            raise MonotonicityError(f"negative marginal return {d!r}; set function is not monotone")
        return 0.0
    return d


def marginal_gain(f: SetFunction, a: Subset, b: Subset) -> float:
    """``f(A | B) - f(A)``, with floating noise below zero clamped away."""
    ma, mb = to_mask(a), to_mask(b)
    return _guarded_difference(f(ma | mb), f(ma))


def constraint_marginal(c: ConstraintSpec, a: Subset, b: Subset) -> float:
    """``h((A | B) & scope) - h(A & scope)``."""
    ma = to_mask(a) & c.scope
    mb = to_mask(b) & c.scope
    if not mb & ~ma:
        return 0.0
    return _guarded_difference(c.h(ma | mb), c.h(ma))


def is_feasible(instance: ProblemInstance, subset: Subset) -> bool:
    mask = to_mask(subset)
    return all(c.load(mask) <= c.budget for c in instance.constraints)


class Violation(NamedTuple):
    code: str
    detail: str


def validate_instance(instance: ProblemInstance) -> list[Violation]:
    """Check the standing assumptions; an empty list means the instance is valid."""
    report: list[Violation] = []
    ground = instance.ground
    if not instance.constraints:
        report.append(Violation("no-constraints", "the constraint list is empty"))
    if instance.objective.domain_mask != ground.full_mask:
        report.append(Violation("objective-domain", "objective is not defined on the whole ground set"))
    elif instance.objective(0) != 0.0:
        report.append(Violation("objective-nonzero-empty", f"f(empty) = {instance.objective(0)!r}"))
    union = 0
    for i, c in enumerate(instance.constraints):
        union |= c.scope
        if c.budget < 0:
            report.append(Violation("negative-budget", f"constraint {i} has budget {c.budget!r}"))
        if c.scope & ~c.h.domain_mask:
            report.append(Violation("constraint-domain", f"constraint {i} is not defined on its whole scope"))
            continue
        if c.h(0) != 0.0:
            report.append(Violation("constraint-nonzero-empty", f"h_{i}(empty) = {c.h(0)!r}"))
        for k in iter_bits(c.scope):
            if not c.h(1 << k) > 0.0:
                report.append(
                    Violation("zero-singleton-cost", f"h_{i}({{{ground.labels[k]}}}) = {c.h(1 << k)!r}")
                )
    if instance.constraints and union != ground.full_mask:
        missing = ground.labels_of(ground.full_mask & ~union)
        report.append(Violation("scope-union", f"items {missing} are in no constraint scope"))
    if instance.disjoint_blocks:
        seen = 0
        for i, c in enumerate(instance.constraints):
            if seen & c.scope:
                shared = ground.labels_of(seen & c.scope)
                report.append(Violation("overlap", f"scope of constraint {i} shares items {shared}"))
            seen |= c.scope
    return report
