"""Sensor-scheduling experiments: solution quality against guarantees, and runtime.

Every random instance is a pure function of ``(seed, state_dim, m, sigma_v,
trial)``: each combination keys its own Philox stream, so trials can run in
any order or in parallel and still reproduce byte-identical CSVs.

Performance CSV columns, in order::

    sigma_v, trial, f_alg1, f_alg2, f_opt, ratio_alg1, ratio_alg2,
    guarantee_thm1, guarantee_thm2, guarantee_thm2_lb, gamma_f, kappa_f,
    alpha_f, gamma_tilde_f, alpha_h, ratio_source, assumption3_blocks,
    feasible_alg1, feasible_alg2[, wall_time_alg1, wall_time_alg2]

Runtime CSV columns::

    m, trials, mean_time_alg1, mean_time_alg2, alg1_faster,
    mean_f_alg1, mean_f_alg2
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .core import ConstraintSpec, GroundSet, ProblemInstance, is_feasible, iter_bits
from .greedy import general_greedy, parallel_greedy
from .kalman import KalmanInstance, KalmanObjective, prop1_bounds
from .latency import LatencyFunction, LatencyProfile, check_assumption3, latency_curvature_bound
from .oracle import brute_force_opt
from .ratios import (
    MAX_EXACT_ITEMS,
    RatioReport,
    constraint_curvatures,
    exact_ratios,
    guarantee_inputs,
    theorem1_bound,
    theorem2_bound,
)
from .synthetic import make_rng

PERF_COLUMNS = [
    "sigma_v", "trial", "f_alg1", "f_alg2", "f_opt", "ratio_alg1", "ratio_alg2",
    "guarantee_thm1", "guarantee_thm2", "guarantee_thm2_lb", "gamma_f", "kappa_f",
    "alpha_f", "gamma_tilde_f", "alpha_h", "ratio_source", "assumption3_blocks",
    "feasible_alg1", "feasible_alg2",
]
TIMING_COLUMNS = ["wall_time_alg1", "wall_time_alg2"]
SUMMARY_COLUMNS = [
    "sigma_v", "trials", "mean_ratio_alg1", "mean_ratio_alg2",
    "mean_guarantee_thm1", "mean_guarantee_thm2", "alg2_better",
]
RUNTIME_COLUMNS = ["m", "trials", "mean_time_alg1", "mean_time_alg2", "alg1_faster", "mean_f_alg1", "mean_f_alg2"]
# columns of a runtime CSV that do not depend on wall time
RUNTIME_STABLE_COLUMNS = ["m", "trials", "mean_f_alg1", "mean_f_alg2"]


@dataclass
class ExperimentConfig:
    """Protocol parameters.

    ``latency_parameterization`` says how ``compute_rate``/``transmit_rate``
    are read: ``"rate"`` (exponential with mean ``1/rate``) or ``"mean"``.
    ``m_sweep`` is used by the runtime experiment only, which draws at
    ``sigma_range[0]``.
    """

    state_dim: int = 3
    sensors_per_step: int = 3
    horizon: int = 2
    sigma_range: list[float] = field(default_factory=lambda: [float(s) for s in range(1, 31)])
    trials: int = 50
    seed: int = 0
    compute_rate: float = 0.5
    transmit_rate: float = 0.2
    latency_parameterization: str = "rate"
    budget_fraction: float = 0.5
    ratio_cap: int = MAX_EXACT_ITEMS
    m_sweep: list[int] = field(default_factory=lambda: list(range(20, 31)))
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not (self.compute_rate > 0 and self.transmit_rate > 0):
            raise ValueError("latency parameters must be positive")
        if not 0 < self.budget_fraction <= 1:
            raise ValueError("budget_fraction must lie in (0, 1]")
        if self.latency_parameterization not in ("rate", "mean"):
            raise ValueError("latency_parameterization must be 'rate' or 'mean'")
        if not self.sigma_range:
            raise ValueError("sigma_range must not be empty")

    @property
    def ground_size(self) -> int:
        return (self.horizon + 1) * self.sensors_per_step

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def paper_fig1(seed: int = 0) -> ExperimentConfig:
    return ExperimentConfig(seed=seed)


def paper_fig2(seed: int = 0) -> ExperimentConfig:
    return ExperimentConfig(state_dim=10, sensors_per_step=20, trials=5, sigma_range=[1.0], seed=seed)


PRESETS = {"paper-fig1": paper_fig1, "paper-fig2": paper_fig2}


def _float_key(x: float) -> tuple[int, int]:
    bits = struct.unpack("<Q", struct.pack("<d", float(x)))[0]
    return bits >> 32, bits & 0xFFFFFFFF


def _exponential(rng: np.random.Generator, param: float, how: str, size: int) -> np.ndarray:
    scale = 1.0 / param if how == "rate" else param
    return rng.exponential(scale, size)


def gen_kalman(config: ExperimentConfig, sigma_v: float, trial: int) -> tuple[KalmanInstance, list[LatencyProfile]]:
    """System matrices and per-step latency profiles for one trial."""
    nx, m, ell = config.state_dim, config.sensors_per_step, config.horizon
    rng = make_rng(config.seed, nx, m, ell, *_float_key(sigma_v), trial)
    A = rng.standard_normal((ell, nx, nx))
    C = rng.standard_normal((ell + 1, m, nx))
    kal = KalmanInstance(ell, A, C, 2.0 * np.eye(nx), np.full((ell + 1, m), float(sigma_v)), np.eye(nx))
    profiles = []
    for _ in range(ell + 1):
        c = _exponential(rng, config.compute_rate, config.latency_parameterization, m)
        t = _exponential(rng, config.transmit_rate, config.latency_parameterization, m)
        profiles.append(LatencyProfile(c.tolist(), t.tolist()))
    return kal, profiles


def gen_instance(config: ExperimentConfig, sigma_v: float, trial: int) -> ProblemInstance:
    """Sensor scheduling instance with one latency constraint per time step."""
    kal, profiles = gen_kalman(config, sigma_v, trial)
    m = config.sensors_per_step
    ground = GroundSet.from_blocks([[f"s{k}_{i}" for i in range(m)] for k in range(config.horizon + 1)])
    constraints = []
    for k, prof in enumerate(profiles):
        h = LatencyFunction(ground.blocks[k], prof)
        scope = ground.block_mask(k)
        constraints.append(ConstraintSpec(h, scope, config.budget_fraction * h(scope), k))
    return ProblemInstance(ground, KalmanObjective(kal), constraints, True)


@dataclass
class TrialRecord:
    sigma_v: float
    trial: int
    f_alg1: float
    f_alg2: float
    f_opt: float
    ratio_alg1: float
    ratio_alg2: float
    guarantee_thm1: float
    guarantee_thm2: float
    guarantee_thm2_lb: float
    gamma_f: float
    kappa_f: float
    alpha_f: float
    gamma_tilde_f: float
    alpha_h: float
    ratio_source: str
    assumption3_blocks: int
    feasible_alg1: bool
    feasible_alg2: bool
    wall_time_alg1: float = 0.0
    wall_time_alg2: float = 0.0


def _ratio(value: float, opt: float) -> float:
    return 1.0 if opt <= 0.0 else value / opt


def bounded_ratios(instance: ProblemInstance, ratio_cap: int = MAX_EXACT_ITEMS) -> tuple[RatioReport, list[float]]:
    """Closed-form ratio bounds for a sensor scheduling instance too large to scan.

    The objective gets the eigenvalue lower bound as its submodularity
    ratio.  The matching DR ratio and curvature bounds are used only for a
    single time step; with a longer horizon they can be violated, so the
    trivial values ``kappa = 0`` and ``alpha = 1`` are reported instead.  Latency constraints use :func:`latency_curvature_bound`
    when the slack condition holds, an exact scan when their block fits
    under ``ratio_cap``, and 1 otherwise.
    """
    kal = instance.objective.instance
    gamma, alpha = prop1_bounds(kal)
    kappa = gamma
    if kal.horizon > 0:
        kappa, alpha = 0.0, 1.0
    report = RatioReport(gamma, kappa, alpha, alpha, "bound")
    curv = []
    for c in instance.constraints:
        prof = c.h.profile
        if check_assumption3(prof).satisfied:
            curv.append(latency_curvature_bound(prof))
        elif len(prof) <= ratio_cap:
            curv.append(exact_ratios(c.h, list(iter_bits(c.scope))).alpha_ext)
        else:
            curv.append(1.0)
    return report, curv


def run_trial(config: ExperimentConfig, sigma_v: float, trial: int) -> TrialRecord:
    inst = gen_instance(config, sigma_v, trial)
    f = inst.objective

    inst.clear_caches()
    t0 = time.perf_counter()
    sol1, traces = parallel_greedy(inst)
    t1 = time.perf_counter()
    inst.clear_caches()
    t2 = time.perf_counter()
    sol2, gtrace = general_greedy(inst)
    t3 = time.perf_counter()

    opt = brute_force_opt(inst)
    if inst.size <= config.ratio_cap:
        report, curv = exact_ratios(f), constraint_curvatures(inst)
        source = "exact"
    else:
        report, curv = bounded_ratios(inst, config.ratio_cap)
        source = "bound"
    g1 = theorem1_bound(guarantee_inputs(inst, report, curv, block_traces=traces))
    inp2 = guarantee_inputs(inst, report, curv, general_trace=gtrace, reference=opt.optimum, psi_mode="exact")
    g2 = theorem2_bound(inp2)[1]
    inp2_lb = guarantee_inputs(inst, report, curv, general_trace=gtrace, psi_mode="lower-bound")
    g2_lb = theorem2_bound(inp2_lb)[1]
    gt = guarantee_inputs(inst, report, curv, block_traces=traces).gamma_tilde_f
    a3 = sum(check_assumption3(c.h.profile).satisfied for c in inst.constraints)
    return TrialRecord(
        sigma_v=float(sigma_v),
        trial=trial,
        f_alg1=f(sol1),
        f_alg2=f(sol2),
        f_opt=opt.value,
        ratio_alg1=_ratio(f(sol1), opt.value),
        ratio_alg2=_ratio(f(sol2), opt.value),
        guarantee_thm1=g1,
        guarantee_thm2=g2,
        guarantee_thm2_lb=g2_lb,
        gamma_f=report.gamma,
        kappa_f=report.kappa,
        alpha_f=report.alpha,
        gamma_tilde_f=gt,
        alpha_h=min(curv),
        ratio_source=source,
        assumption3_blocks=a3,
        feasible_alg1=is_feasible(inst, sol1),
        feasible_alg2=is_feasible(inst, sol2),
        wall_time_alg1=t1 - t0,
        wall_time_alg2=t3 - t2,
    )


def _trial_args(config: ExperimentConfig) -> list[tuple[float, int]]:
    return [(float(s), t) for s in config.sigma_range for t in range(config.trials)]


def _run_trial_packed(args) -> TrialRecord:
    return run_trial(*args)


def run_performance_experiment(config: ExperimentConfig, progress=None) -> list[TrialRecord]:
    """All trials for every ``sigma_v``, sorted by ``(sigma_v, trial)``."""
    jobs = _trial_args(config)
    records: list[TrialRecord] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for rec in pool.map(_run_trial_packed, [(config, s, t) for s, t in jobs], chunksize=8):
                records.append(rec)
                if progress:
                    progress(len(records), len(jobs))
    else:
        for s, t in jobs:
            records.append(run_trial(config, s, t))
            if progress:
                progress(len(records), len(jobs))
    records.sort(key=lambda r: (r.sigma_v, r.trial))
    return records


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def write_performance_csv(records: Sequence[TrialRecord], path: Union[str, Path], timing: bool = False) -> None:
    cols = PERF_COLUMNS + (TIMING_COLUMNS if timing else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in cols])


def summarize_performance(records: Iterable[TrialRecord]) -> list[dict]:
    """Per-``sigma_v`` means of actual ratios and guarantees."""
    groups: dict[float, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(r.sigma_v, []).append(r)
    out = []
    for s in sorted(groups):
        rs = groups[s]
        mean = lambda attr: math.fsum(getattr(r, attr) for r in rs) / len(rs)  # noqa: E731
        row = {
            "sigma_v": s,
            "trials": len(rs),
            "mean_ratio_alg1": mean("ratio_alg1"),
            "mean_ratio_alg2": mean("ratio_alg2"),
            "mean_guarantee_thm1": mean("guarantee_thm1"),
            "mean_guarantee_thm2": mean("guarantee_thm2"),
        }
        row["alg2_better"] = row["mean_ratio_alg2"] > row["mean_ratio_alg1"]
        out.append(row)
    return out


def write_rows(rows: Sequence[dict], columns: Sequence[str], path: Union[str, Path]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


@dataclass
class RuntimeRow:
    m: int
    trials: int
    mean_time_alg1: float
    mean_time_alg2: float
    mean_f_alg1: float
    mean_f_alg2: float

    @property
    def alg1_faster(self) -> bool:
        return self.mean_time_alg1 < self.mean_time_alg2

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["alg1_faster"] = self.alg1_faster
        return d


def run_runtime_experiment(config: ExperimentConfig, progress=None) -> list[RuntimeRow]:
    """Wall-clock time of both greedies over the ``m_sweep`` (no oracle, no ratios)."""
    sigma_v = float(config.sigma_range[0])
    rows = []
    for m in config.m_sweep:
        cfg = dataclasses.replace(config, sensors_per_step=int(m))
        t1s, t2s, f1s, f2s = [], [], [], []
        for trial in range(cfg.trials):
            inst = gen_instance(cfg, sigma_v, trial)
            inst.clear_caches()
            t0 = time.perf_counter()
            sol1, _ = parallel_greedy(inst)
            t1s.append(time.perf_counter() - t0)
            inst.clear_caches()
            t0 = time.perf_counter()
            sol2, _ = general_greedy(inst)
            t2s.append(time.perf_counter() - t0)
            f1s.append(inst.objective(sol1))
            f2s.append(inst.objective(sol2))
        n = cfg.trials
        rows.append(RuntimeRow(int(m), n, math.fsum(t1s) / n, math.fsum(t2s) / n, math.fsum(f1s) / n, math.fsum(f2s) / n))
        if progress:
            progress(len(rows), len(config.m_sweep))
    return rows


def write_runtime_csv(rows: Sequence[RuntimeRow], path: Union[str, Path], timing: bool = True) -> None:
    """Write the runtime table; ``timing=False`` keeps only the reproducible columns."""
    write_rows([r.as_dict() for r in rows], RUNTIME_COLUMNS if timing else RUNTIME_STABLE_COLUMNS, path)


def summary_path(csv_path: Union[str, Path]) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + "_summary.csv")
