"""Benchmark the compiled simulation core against the pure-Python fallback.

Both backends are run on the same configurations; results must agree exactly
(same RNG, same event order), so the comparison is purely about speed.

Usage: python benchmarks/bench_backends.py [--quick]
"""
from __future__ import annotations

import argparse
import time

from dynsched.engine import SimConfig, _simcore, run_simulation
from dynsched.kernel import Problem
from dynsched.platform import make_uniform_platform
from dynsched.rng import RandomStream
from dynsched.strategies import StrategyId

FULL_CASES = [
    ("outer", 100, 20, StrategyId.RANDOM_OUTER),
    ("outer", 100, 20, StrategyId.DYNAMIC_OUTER),
    ("outer", 100, 20, StrategyId.DYNAMIC_OUTER_2P),
    ("outer", 300, 30, StrategyId.DYNAMIC_OUTER_2P),
    ("matmul", 30, 20, StrategyId.RANDOM_MATMUL),
    ("matmul", 30, 20, StrategyId.DYNAMIC_MATMUL),
    ("matmul", 40, 100, StrategyId.DYNAMIC_MATMUL_2P),
]
QUICK_CASES = [
    ("outer", 50, 8, StrategyId.DYNAMIC_OUTER),
    ("outer", 50, 8, StrategyId.DYNAMIC_OUTER_2P),
    ("matmul", 16, 8, StrategyId.DYNAMIC_MATMUL),
]


def timed(config: SimConfig, backend: str, repeats: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = run_simulation(config, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="small cases only (for CI smoke runs)")
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats per case; best time wins")
    args = parser.parse_args()

    if _simcore is None:
        print("compiled backend unavailable; nothing to compare")
        return 1

    cases = QUICK_CASES if args.quick else FULL_CASES
    header = f"{'kernel':<8}{'n':>6}{'p':>6}  {'strategy':<20}" \
             f"{'pure (s)':>10}{'compiled (s)':>14}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for kernel, n, p, strategy in cases:
        platform = make_uniform_platform(
            p, 10.0, 100.0, RandomStream(1).derive("bench", kernel, n, p)
        )
        config = SimConfig(Problem(kernel, n), platform, strategy, seed=7)
        t_pure, r_pure = timed(config, "pure", args.repeats)
        t_fast, r_fast = timed(config, "compiled", args.repeats)
        if (r_pure.total_comm_blocks, r_pure.makespan) != (
            r_fast.total_comm_blocks, r_fast.makespan
        ):
            print(f"BACKEND MISMATCH for {kernel} n={n} p={p} {strategy.value}")
            return 1
        print(
            f"{kernel:<8}{n:>6}{p:>6}  {strategy.value:<20}"
            f"{t_pure:>10.4f}{t_fast:>14.4f}{t_pure / t_fast:>8.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
