"""Command-line interface.

Subcommands: ``simulate`` runs one simulation and prints a one-line summary;
``analyze`` evaluates the analytic cost model at a given switch parameter;
``optimize-beta`` finds the model-optimal switch parameter; ``experiment``
runs a named recipe or a spec file and writes CSV (and optionally SVG)
artifacts.  Exit codes: 0 success, 1 usage error, 2 simulation fault.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import (
    AnalysisParams,
    admissible_beta_limit,
    lower_bound_matmul,
    lower_bound_outer,
    objective,
    optimize_beta,
    phase1_volume_outer,
    phase2_volume_outer,
    phase_volumes_matmul,
)
from .engine import SimConfig, run_simulation, write_trace_csv
from .experiments import RECIPES, emit_csv, load_spec, run_recipe, run_sweep
from .kernel import Problem, SimulationFault
from .platform import (
    NO_DRIFT,
    Platform,
    jitter,
    load_speeds,
    make_discrete_platform,
    make_uniform_platform,
)
from .rng import RandomStream
from .strategies import StrategyId
from .svgplot import emit_svg_plot, infer_x_axis


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def real_or_auto(text: str) -> float | None:
    return None if text == "auto" else float(text)


def lo_hi(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError("expected LO,HI")
    return float(parts[0]), float(parts[1])


def speed_list(text: str) -> tuple[float, ...]:
    values = tuple(float(part) for part in text.split(",") if part)
    if not values:
        raise ValueError("expected at least one speed")
    return values


def _add_problem_args(parser) -> None:
    parser.add_argument("--kernel", required=True, choices=("outer", "matmul"))
    parser.add_argument("--n", required=True, type=int,
                        help="blocks per matrix dimension")
    parser.add_argument("--p", required=True, type=int, help="number of workers")


def _loaded_platform(args) -> Platform:
    drift = jitter(args.jitter) if getattr(args, "jitter", 0.0) else NO_DRIFT
    platform = load_speeds(args.speeds_file, drift)
    if platform.p != args.p:
        raise ValueError(
            f"speeds file has {platform.p} speeds but --p is {args.p}"
        )
    return platform


def _platform_for(args) -> Platform:
    if args.speeds_file:
        return _loaded_platform(args)
    drift = jitter(args.jitter) if args.jitter else NO_DRIFT
    rng = RandomStream(args.seed).derive("platform")
    if args.uniform:
        lo, hi = args.uniform
        return make_uniform_platform(args.p, lo, hi, rng, drift)
    if args.set:
        return make_discrete_platform(args.p, args.set, rng, drift)
    return make_uniform_platform(args.p, 100.0, 100.0, None, drift)


def _params_for(args) -> AnalysisParams:
    if args.speeds_file:
        platform = load_speeds(args.speeds_file)
        if platform.p != args.p:
            raise ValueError(
                f"speeds file has {platform.p} speeds but --p is {args.p}"
            )
        return AnalysisParams.from_platform(args.kernel, args.n, platform)
    return AnalysisParams.homogeneous(args.kernel, args.n, args.p)


def _cmd_simulate(args) -> int:
    problem = Problem(args.kernel, args.n)
    strategy = StrategyId.parse(args.strategy)
    platform = _platform_for(args)
    config = SimConfig(problem, platform, strategy, beta=args.beta,
                       seed=args.seed, trace=args.trace is not None)
    result = run_simulation(config)
    parts = [
        f"kernel={args.kernel}",
        f"n={args.n}",
        f"p={args.p}",
        f"strategy={strategy.value}",
    ]
    if result.beta is not None:
        parts.append(f"beta={result.beta:.6g}")
    parts += [
        f"comm_blocks={result.total_comm_blocks}",
        f"normalized_comm={result.normalized_comm:.6g}",
        f"makespan={result.makespan:.6g}",
        f"backend={result.backend}",
    ]
    print(" ".join(parts))
    if args.trace:
        write_trace_csv(result, args.trace)
    return 0


def _cmd_analyze(args) -> int:
    params = _params_for(args)
    value = objective(args.beta, params)
    if args.kernel == "outer":
        v1 = phase1_volume_outer(args.beta, params.rs, args.n)
        v2 = phase2_volume_outer(args.beta, params.rs, args.n)
        bound = lower_bound_outer(params.rs, args.n)
    else:
        v1, v2 = phase_volumes_matmul(args.beta, params.rs, args.n)
        bound = lower_bound_matmul(params.rs, args.n)
    print(f"objective={value:.6g}")
    print(f"phase1_volume={v1:.6g}")
    print(f"phase2_volume={v2:.6g}")
    print(f"total_volume={v1 + v2:.6g}")
    print(f"lower_bound={bound:.6g}")
    return 0


def _cmd_optimize_beta(args) -> int:
    params = _params_for(args)
    hi = min(12.0, admissible_beta_limit(params.rs))
    result = optimize_beta(params, bracket=(0.1, hi))
    print(f"beta={result.beta:.6g}")
    print(f"objective={result.objective_value:.6g}")
    print(f"phase1_fraction={result.phase1_fraction:.6g}")
    return 0


def _cmd_experiment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.recipe:
        name = args.recipe
        rows = run_recipe(args.recipe, jobs=args.jobs)
    else:
        spec = load_spec(args.spec)
        name = spec.name or "experiment"
        rows = run_sweep(spec, jobs=args.jobs)
    csv_path = out / f"{name}.csv"
    emit_csv(rows, csv_path)
    print(f"wrote {csv_path}")
    if args.plot:
        svg_path = out / f"{name}.svg"
        emit_svg_plot(rows, infer_x_axis(rows), "strategy", svg_path)
        print(f"wrote {svg_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="dynsched",
        description="Simulate and analyze dynamic task allocation for block "
                    "outer-product and matrix-multiplication kernels.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    sim = sub.add_parser("simulate", help="run one simulation")
    _add_problem_args(sim)
    sim.add_argument("--strategy", required=True,
                     choices=[s.value for s in StrategyId])
    sim.add_argument("--beta", type=real_or_auto, default=None,
                     help="two-phase switch parameter: a real, or 'auto'")
    source = sim.add_mutually_exclusive_group()
    source.add_argument("--speeds-file", type=Path,
                        help="one worker speed per line")
    source.add_argument("--uniform", type=lo_hi, metavar="LO,HI",
                        help="draw speeds uniformly from [LO, HI]")
    source.add_argument("--set", type=speed_list, metavar="V1,V2,...",
                        help="draw speeds uniformly from a finite set")
    sim.add_argument("--jitter", type=float, default=0.0,
                     help="per-task speed jitter fraction")
    sim.add_argument("--seed", required=True, type=int)
    sim.add_argument("--trace", type=Path, default=None,
                     help="write knowledge-growth samples to this CSV")
    sim.set_defaults(func=_cmd_simulate)

    ana = sub.add_parser("analyze", help="evaluate the analytic cost model")
    _add_problem_args(ana)
    ana.add_argument("--speeds-file", type=Path)
    ana.add_argument("--beta", required=True, type=float)
    ana.set_defaults(func=_cmd_analyze)

    opt = sub.add_parser("optimize-beta",
                         help="find the model-optimal switch parameter")
    _add_problem_args(opt)
    opt.add_argument("--speeds-file", type=Path)
    opt.set_defaults(func=_cmd_optimize_beta)

    exp = sub.add_parser("experiment", help="run a batch experiment")
    target = exp.add_mutually_exclusive_group(required=True)
    target.add_argument("--recipe", choices=sorted(RECIPES))
    target.add_argument("--spec", type=Path)
    exp.add_argument("--out", required=True, type=Path)
    exp.add_argument("--jobs", type=int, default=1)
    exp.add_argument("--plot", action="store_true",
                     help="also write an SVG chart")
    exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SimulationFault as fault:
        print(f"error: {fault}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
