"""JSON instance files and trace serialization.

Instance schema (UTF-8 JSON object)::

    {
      "blocks": [["a", "b"], ["c"]],           # element labels per block
      "objective": {"kind": ..., "payload": {...}},
      "constraints": [
        {"kind": ..., "payload": {...}, "budget": 2.0, "scope_block": 0}
      ],
      "disjoint_blocks": true
    }

A label that appears in several blocks is a single shared item.

Objective kinds and payloads:

* ``modular``   ``{"weights": {label: w}}``
* ``coverage``  ``{"covers": {label: [u, ...]}, "weights": {u: w}}`` (weights optional)
* ``table``     ``{"values": [...]}``, ``2^|S|`` values indexed by bitmask over
  items in first-appearance order
* ``kalman``    ``{"state_dim", "sensors_per_step", "horizon", "A", "C", "W",
  "Pi0", "sigma"}``, matrices dense row-major; block ``k`` lists the sensors
  of step ``k`` in row order

Constraint kinds (functions of the scope block's items):

* ``budget``       ``{"costs": {label: cost}}``
* ``cardinality``  ``{}``
* ``latency``      ``{"c": [...], "t": [...]}`` aligned with the block order
* ``coverage``     same payload as the objective kind
* ``table``        ``{"values": [...]}`` indexed by bitmask over the block order
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Sequence, Union

from .core import (
    CardinalityFunction,
    ConstraintSpec,
    CoverageFunction,
    GroundSet,
    ModularFunction,
    ProblemInstance,
    SetFunction,
    TableFunction,
)
from .errors import InstanceFormatError, NonsubmaxError
from .greedy import BlockTrace, GeneralTrace, Step
from .kalman import KalmanInstance, KalmanObjective
from .latency import LatencyFunction, LatencyProfile

OBJECTIVE_KINDS = ("modular", "coverage", "table", "kalman")
CONSTRAINT_KINDS = ("budget", "cardinality", "latency", "coverage", "table")


def _by_label(ground: GroundSet, mapping: dict, what: str) -> dict[int, Any]:
    if not isinstance(mapping, dict):
        raise InstanceFormatError(f"{what} must be an object keyed by element label")
    lookup = {lab: k for k, lab in enumerate(ground.labels)}
    out = {}
    for lab, val in mapping.items():
        if lab not in lookup:
            raise InstanceFormatError(f"{what} mentions unknown label {lab!r}")
        out[lookup[lab]] = val
    return out


def _coverage(ground: GroundSet, payload: dict, items: Sequence[int]) -> CoverageFunction:
    covers = _by_label(ground, payload.get("covers", {}), "covers")
    covers = {k: [str(u) for u in covers.get(k, [])] for k in items}
    weights = payload.get("weights")
    if weights is not None:
        weights = {str(u): float(w) for u, w in weights.items()}
    return CoverageFunction(covers, weights)


def _objective(ground: GroundSet, spec: dict) -> SetFunction:
    kind = spec.get("kind")
    payload = spec.get("payload", {})
    everything = range(ground.size)
    if kind == "modular":
        w = _by_label(ground, payload.get("weights", {}), "weights")
        return ModularFunction({k: float(w.get(k, 0.0)) for k in everything})
    if kind == "coverage":
        return _coverage(ground, payload, everything)
    if kind == "table":
        return TableFunction(list(everything), payload["values"])
    if kind == "kalman":
        inst = KalmanInstance.from_payload(payload)
        m = inst.sensors_per_step
        expected = tuple(tuple(range(k * m, (k + 1) * m)) for k in range(inst.horizon + 1))
        if ground.blocks != expected:
            raise InstanceFormatError("kalman objective needs one disjoint block of sensors_per_step items per step")
        return KalmanObjective(inst)
    raise InstanceFormatError(f"unknown objective kind {kind!r}; expected one of {OBJECTIVE_KINDS}")


def _constraint(ground: GroundSet, spec: dict, index: int) -> ConstraintSpec:
    kind = spec.get("kind")
    payload = spec.get("payload", {})
    try:
        block = int(spec["scope_block"])
        budget = float(spec["budget"])
        items = ground.blocks[block]
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise InstanceFormatError(f"constraint {index}: bad scope_block/budget ({exc})") from None
    if kind == "budget":
        costs = _by_label(ground, payload.get("costs", {}), "costs")
        missing = [ground.labels[k] for k in items if k not in costs]
        if missing:
            raise InstanceFormatError(f"constraint {index}: no cost for {missing}")
        h = ModularFunction({k: float(costs[k]) for k in items})
    elif kind == "cardinality":
        h = CardinalityFunction(items)
    elif kind == "latency":
        h = LatencyFunction(items, LatencyProfile(payload["c"], payload["t"]))
    elif kind == "coverage":
        h = _coverage(ground, payload, items)
    elif kind == "table":
        h = TableFunction(items, payload["values"])
    else:
        raise InstanceFormatError(f"unknown constraint kind {kind!r}; expected one of {CONSTRAINT_KINDS}")
    return ConstraintSpec(h, ground.block_mask(block), budget, block)


def instance_from_dict(data: dict) -> ProblemInstance:
    if not isinstance(data, dict):
        raise InstanceFormatError("instance must be a JSON object")
    try:
        ground = GroundSet.from_blocks(data["blocks"])
        objective = _objective(ground, data["objective"])
        constraints = [_constraint(ground, c, i) for i, c in enumerate(data["constraints"])]
        disjoint = bool(data.get("disjoint_blocks", True))
    except NonsubmaxError as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(str(exc)) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceFormatError(f"malformed instance: {exc!r}") from None
    return ProblemInstance(ground, objective, constraints, disjoint)


def load_instance(path: Union[str, Path]) -> ProblemInstance:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: invalid JSON ({exc})") from None
    return instance_from_dict(data)


def _fn_payload(ground: GroundSet, h: SetFunction, items: Sequence[int]) -> tuple[str, dict]:
    labels = ground.labels
    if isinstance(h, CardinalityFunction):
        return "cardinality", {}
    if isinstance(h, ModularFunction):
        return "modular", {"weights": {labels[k]: h.weights[k] for k in items}}
    if isinstance(h, CoverageFunction):
        payload: dict = {"covers": {labels[k]: sorted(h.covers[k], key=repr) for k in items}}
        if h.weights is not None:
            payload["weights"] = h.weights
        return "coverage", payload
    if isinstance(h, TableFunction):
        if tuple(items) != h.items:
            raise InstanceFormatError("table function items do not match the block order")
        return "table", {"values": list(h.values)}
    if isinstance(h, LatencyFunction):
        return "latency", {"c": list(h.profile.c), "t": list(h.profile.t)}
    if isinstance(h, KalmanObjective):
        return "kalman", h.instance.to_payload()
    raise InstanceFormatError(f"cannot serialize set function of kind {h.kind!r}")


def instance_to_dict(instance: ProblemInstance) -> dict:
    ground = instance.ground
    kind, payload = _fn_payload(ground, instance.objective, list(range(ground.size)))
    constraints = []
    for c in instance.constraints:
        ckind, cpayload = _fn_payload(ground, c.h, list(ground.blocks[c.block]))
        if ckind == "modular":
            ckind, cpayload = "budget", {"costs": cpayload["weights"]}
        constraints.append({"kind": ckind, "payload": cpayload, "budget": c.budget, "scope_block": c.block})
    return {
        "blocks": [[ground.labels[k] for k in b] for b in ground.blocks],
        "objective": {"kind": kind, "payload": payload},
        "constraints": constraints,
        "disjoint_blocks": instance.disjoint_blocks,
    }


def save_instance(instance: ProblemInstance, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1) + "\n", encoding="utf-8")


def _step_record(ground: GroundSet, s: Step) -> dict:
    finite = not math.isinf(s.ratio)
    return {
        "step": s.step,
        "candidate": ground.labels[s.candidate],
        "ratio": s.ratio if finite else None,
        "ratio_infinite": not finite,
        "objective_marginal": s.objective_marginal,
        "constraint_marginal": s.constraint_marginal,
        "constraint_index": s.constraint_index,
        "accepted": s.accepted,
    }


def block_traces_to_dict(instance: ProblemInstance, traces: Sequence[BlockTrace]) -> dict:
    g = instance.ground
    out = []
    for t in traces:
        out.append(
            {
                "block": t.block,
                "steps": [_step_record(g, s) for s in t.steps],
                "accepted": [g.labels[q] for q in t.accepted],
                "truncation_index": t.truncation_index,
                "first_rejected": None if t.first_rejected is None else g.labels[t.first_rejected],
                "best_singleton": None if t.best_singleton is None else g.labels[t.best_singleton],
                "final_choice": t.final_choice,
                "solution": g.labels_of(t.solution),
            }
        )
    return {"algorithm": "parallel", "blocks": out}


def general_trace_to_dict(instance: ProblemInstance, trace: GeneralTrace) -> dict:
    g = instance.ground
    return {
        "algorithm": "general",
        "steps": [_step_record(g, s) for s in trace.steps],
        "accepted": [g.labels[q] for q in trace.items],
        "prefix_length": trace.prefix_length,
    }
