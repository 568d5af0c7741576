"""Command line tools for nonsubmodular greedy maximization.

Exit codes: 0 success, 2 invalid input, 3 size limit exceeded,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .errors import ConditioningError, DegenerateBudgetError, NonsubmaxError, SizeLimitError
from .greedy import general_greedy, parallel_greedy
from .io import block_traces_to_dict, general_trace_to_dict, load_instance, save_instance
from .kalman import KalmanObjective, prop1_bounds
from .latency import LatencyFunction, check_assumption3, prop2_curvature_bound
from .core import is_feasible, iter_bits, validate_instance
from .oracle import brute_force_opt
from .ratios import exact_ratios

EXIT_OK, EXIT_INPUT, EXIT_SIZE, EXIT_NUMERIC = 0, 2, 3, 4


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1))


def _load(path):
    inst = load_instance(path)
    problems = validate_instance(inst)
    if problems:
        for p in problems:
            print(f"warning: {p.code}: {p.detail}", file=sys.stderr)
    return inst


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if args.alg == "parallel":
        sol, traces = parallel_greedy(inst, workers=args.workers)
        trace = block_traces_to_dict(inst, traces)
    else:
        sol, gtrace = general_greedy(inst)
        trace = general_trace_to_dict(inst, gtrace)
    _emit(
        {
            "algorithm": args.alg,
            "solution": inst.ground.labels_of(sol),
            "value": inst.objective(sol),
            "feasible": is_feasible(inst, sol),
        }
    )
    if args.trace:
        Path(args.trace).write_text(json.dumps(trace, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load(args.instance)
    res = brute_force_opt(inst)
    _emit(
        {
            "optimum": inst.ground.labels_of(res.optimum),
            "value": res.value,
            "feasible_sets": res.enumerated,
            "ties": res.ties,
        }
    )
    return EXIT_OK


def _labelled_witnesses(inst, report) -> dict:
    lab = inst.ground.labels
    out = {}
    for name, (a, b, v) in report.witnesses.items():
        out[name] = {"A": [lab[q] for q in a], "B": [lab[q] for q in b], "v": None if v is None else lab[v]}
    return out


def cmd_ratios(args) -> int:
    inst = _load(args.instance)
    out: dict = {}
    if args.bounds:
        f = inst.objective
        if not isinstance(f, KalmanObjective) or not all(isinstance(c.h, LatencyFunction) for c in inst.constraints):
            print("error: --bounds needs a kalman objective with latency constraints", file=sys.stderr)
            return EXIT_INPUT
        gamma, alpha = prop1_bounds(f.instance)
        report, curv = bench.bounded_ratios(inst)
        out["objective"] = {
            "gamma_lower": report.gamma,
            "kappa_lower": report.kappa,
            "alpha_upper": report.alpha,
            "alpha_closed_form": alpha,
            "method": "bound",
        }
        cons = []
        for c, a in zip(inst.constraints, curv):
            entry: dict = {"block": c.block, "alpha_ext_upper": a}
            if isinstance(c.h, LatencyFunction) and check_assumption3(c.h.profile).satisfied:
                entry["alpha_ext_closed_form"] = prop2_curvature_bound(c.h.profile)
            cons.append(entry)
        out["constraints"] = cons
    else:
        report = exact_ratios(inst.objective, list(range(inst.size)))
        obj = report.to_dict()
        obj.pop("witnesses")
        if args.witnesses:
            obj["witnesses"] = _labelled_witnesses(inst, report)
        out["objective"] = obj
        cons = []
        for c in inst.constraints:
            r = exact_ratios(c.h, list(iter_bits(c.scope)))
            entry = {"block": c.block, "alpha_ext": r.alpha_ext, "alpha": r.alpha}
            if args.witnesses and "alpha_ext" in r.witnesses:
                entry["witness"] = _labelled_witnesses(inst, r)["alpha_ext"]
            cons.append(entry)
        out["constraints"] = cons
    _emit(out)
    return EXIT_OK


def cmd_gen(args) -> int:
    config = bench.PRESETS[args.preset](args.seed)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.json").write_text(json.dumps(config.to_dict(), indent=1) + "\n", encoding="utf-8")
    count = 0
    if args.preset == "paper-fig2":
        sigma = float(config.sigma_range[0])
        for m in config.m_sweep:
            cfg = bench.ExperimentConfig.from_dict({**config.to_dict(), "sensors_per_step": m})
            for t in range(min(args.trials, cfg.trials)):
                save_instance(bench.gen_instance(cfg, sigma, t), outdir / f"m{m}_trial{t}.json")
                count += 1
    else:
        for s in config.sigma_range:
            for t in range(min(args.trials, config.trials)):
                save_instance(bench.gen_instance(config, float(s), t), outdir / f"sigma{s:g}_trial{t}.json")
                count += 1
    print(f"wrote config.json and {count} instances to {outdir}")
    return EXIT_OK


def _config(args) -> bench.ExperimentConfig:
    if args.config:
        cfg = bench.ExperimentConfig.load(args.config)
    else:
        cfg = bench.PRESETS[args.preset](0)
    if args.workers is not None:
        cfg.workers = args.workers
    return cfg


def cmd_bench(args) -> int:
    try:
        cfg = _config(args)
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.kind == "perf":
        records = bench.run_performance_experiment(cfg)
        bench.write_performance_csv(records, args.output, timing=args.timing)
        summary = bench.summarize_performance(records)
        bench.write_rows(summary, bench.SUMMARY_COLUMNS, bench.summary_path(args.output))
        for row in summary:
            print(
                f"sigma_v={row['sigma_v']:g} ratio1={row['mean_ratio_alg1']:.4f} ratio2={row['mean_ratio_alg2']:.4f} "
                f"thm1={row['mean_guarantee_thm1']:.4f} thm2={row['mean_guarantee_thm2']:.4f} "
                f"alg2_better={row['alg2_better']}"
            )
    else:
        rows = bench.run_runtime_experiment(cfg)
        bench.write_runtime_csv(rows, args.output)
        for r in rows:
            print(f"m={r.m} alg1={r.mean_time_alg1:.4f}s alg2={r.mean_time_alg2:.4f}s alg1_faster={r.alg1_faster}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import emit_plots

    for p in emit_plots(args.csv, args.output):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonsubmax", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a greedy algorithm on an instance file")
    p.add_argument("instance")
    p.add_argument("--alg", choices=("parallel", "general"), default="general")
    p.add_argument("--trace", help="write the step trace as JSON")
    p.add_argument("--workers", type=int, default=1, help="threads for the parallel greedy")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="exhaustive optimum of a small instance")
    p.add_argument("instance")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("ratios", help="submodularity/DR ratios and curvatures")
    p.add_argument("instance")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exhaustive computation (default)")
    mode.add_argument("--bounds", action="store_true", help="closed-form bounds for sensor scheduling instances")
    p.add_argument("--witnesses", action="store_true", help="include the sets attaining each value")
    p.set_defaults(func=cmd_ratios)

    p = sub.add_parser("gen", help="write a preset config and sample instances")
    p.add_argument("--preset", choices=sorted(bench.PRESETS), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1, help="instances per sigma_v (or per m)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="run the performance or runtime experiment")
    p.add_argument("kind", choices=("perf", "runtime"))
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset", choices=sorted(bench.PRESETS))
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="append wall-time columns (not reproducible)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render SVG figures from an experiment CSV")
    p.add_argument("csv")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SizeLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (ConditioningError, DegenerateBudgetError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NonsubmaxError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
