"""Event-driven master-worker simulation.

Workers request work whenever idle (earliest busy-until first, smallest id on
ties).  The master answers with block transfers and a batch of tasks; block
transfers take no simulated time (communication is assumed to overlap
computation perfectly) but are counted, one unit per block.  A task takes
1/speed time units; under a drift policy the speed jitters after every task.
Tasks are marked processed at allocation time, so concurrent workers never
receive them again.

Two interchangeable backends run the loop: a Cython core (dynsched._simcore)
and a pure-Python fallback (dynsched._pysim).  They consume the same random
stream in the same order and produce bit-identical results; the compiled one
is picked at import when available unless DYNSCHED_PURE is set.
"""
from __future__ import annotations

import math
import os
from bisect import insort
from dataclasses import dataclass
from pathlib import Path
from typing import IO, NamedTuple

from .analysis import beta_homogeneous, lower_bound_matmul, lower_bound_outer
from .kernel import Problem, SimulationFault, TaskId, TaskLedger, total_tasks
from .platform import Platform
from .rng import RandomStream
from .strategies import StrategyId

try:
    from . import _simcore
except ImportError:
    _simcore = None

#: consecutive empty batches for one worker before the engine declares livelock
EMPTY_BATCH_LIMIT = 1000


def default_backend() -> str:
    if _simcore is not None and not os.environ.get("DYNSCHED_PURE"):
        return "compiled"
    return "pure"


class IndexSet:
    """Membership plus ordered view plus O(1) uniform complement draws."""

    __slots__ = ("mask", "ordered", "_comp", "_comp_pos")

    def __init__(self, n: int):
        self.mask = bytearray(n)
        self.ordered: list[int] = []
        self._comp = list(range(n))
        self._comp_pos = list(range(n))

    def __contains__(self, v: int) -> bool:
        return self.mask[v] != 0

    def __len__(self) -> int:
        return len(self.ordered)

    @property
    def complement_size(self) -> int:
        return len(self._comp)

    def add(self, v: int) -> None:
        if self.mask[v]:
            raise SimulationFault(f"index {v} added twice")
        self.mask[v] = 1
        insort(self.ordered, v)
        # swap-remove from the complement, keeping draw order deterministic
        pos = self._comp_pos[v]
        last = self._comp[-1]
        self._comp[pos] = last
        self._comp_pos[last] = pos
        self._comp.pop()
        self._comp_pos[v] = -1

    def draw_complement(self, rng: RandomStream) -> int | None:
        if not self._comp:
            return None
        return self._comp[rng.below(len(self._comp))]


class WorkerState:
    __slots__ = (
        "id",
        "known_I",
        "known_J",
        "known_K",
        "held_a",
        "held_b",
        "held_c",
        "queue",
        "busy_until",
        "blocks_received",
        "tasks_done",
        "empty_streak",
    )

    def __init__(self, wid: int, problem: Problem):
        n = problem.n
        self.id = wid
        self.known_I = IndexSet(n)
        self.known_J = IndexSet(n)
        self.known_K = IndexSet(n)  # unused for the outer kernel
        if problem.kind == "matmul":
            self.held_a = bytearray(n * n)
            self.held_b = bytearray(n * n)
            self.held_c = bytearray(n * n)
        else:
            self.held_a = self.held_b = self.held_c = None
        self.queue: list[TaskId] = []
        self.busy_until = 0.0
        self.blocks_received = 0
        self.tasks_done = 0
        self.empty_streak = 0


class MasterState:
    __slots__ = ("problem", "ledger", "workers", "speeds")

    def __init__(self, problem: Problem, platform: Platform):
        self.problem = problem
        self.ledger = TaskLedger(problem)
        self.workers = [WorkerState(k, problem) for k in range(platform.p)]
        self.speeds = list(platform.speeds)


@dataclass(frozen=True)
class SimConfig:
    problem: Problem
    platform: Platform
    strategy: StrategyId
    beta: float | None = None
    seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if self.strategy.kernel != self.problem.kind:
            raise ValueError(
                f"strategy {self.strategy.value} does not apply to kernel {self.problem.kind}"
            )
        if self.beta is not None:
            if not self.strategy.is_two_phase:
                raise ValueError("beta only applies to two-phase strategies")
            if not self.beta > 0:
                raise ValueError("beta must be positive")


class TraceSample(NamedTuple):
    time: float
    worker: int
    x: float
    unprocessed_fraction: float


class WorkerSummary(NamedTuple):
    blocks_received: int
    tasks_done: int
    finish_time: float


@dataclass(frozen=True)
class SimResult:
    per_worker: tuple[WorkerSummary, ...]
    total_comm_blocks: int
    makespan: float
    normalized_comm: float
    beta: float | None
    trace: tuple[TraceSample, ...] | None
    backend: str


def resolve_beta(config: SimConfig) -> float | None:
    if not config.strategy.is_two_phase:
        return None
    if config.beta is not None:
        return config.beta
    # speed-agnostic default: optimize for a homogeneous platform of the same size
    return beta_homogeneous(config.problem.kind, config.problem.n, config.platform.p)


def phase_threshold(problem: Problem, beta: float) -> int:
    return round(math.exp(-beta) * total_tasks(problem))


def communication_lower_bound(problem: Problem, platform: Platform) -> float:
    rs = platform.relative_speeds
    if problem.kind == "outer":
        return lower_bound_outer(rs, problem.n)
    return lower_bound_matmul(rs, problem.n)


def run_simulation(config: SimConfig, backend: str | None = None) -> SimResult:
    """Run one simulation to completion and return its communication profile.

    ``backend`` forces "pure" or "compiled"; by default the compiled core is
    used when present.  Identical configs produce identical results on both.
    """
    backend = backend or default_backend()
    if backend not in ("pure", "compiled"):
        raise ValueError(f"unknown backend: {backend}")
    if backend == "compiled" and _simcore is None:
        raise RuntimeError("compiled core is not available")

    problem, platform, strategy = config.problem, config.platform, config.strategy
    beta = resolve_beta(config)
    if strategy.is_two_phase:
        threshold = phase_threshold(problem, beta)
    elif strategy.is_dynamic:
        threshold = 0  # the dynamic rule applies while any task remains
    else:
        threshold = total_tasks(problem)  # random/sorted never enter the dynamic rule
    seed_state = RandomStream(config.seed).derive("sim").state

    if backend == "compiled":
        kind_code = 0 if problem.kind == "outer" else 1
        sorted_mode = 1 if strategy.is_sorted else 0
        blocks, tasks, finish, total_comm, makespan, raw_trace = _simcore.simulate(
            kind_code,
            problem.n,
            list(platform.speeds),
            platform.drift.magnitude,
            sorted_mode,
            threshold,
            seed_state,
            1 if config.trace else 0,
        )
    else:
        from . import _pysim

        blocks, tasks, finish, total_comm, makespan, raw_trace = _pysim.simulate(
            problem, platform, strategy, threshold, seed_state, config.trace
        )

    per_worker = tuple(
        WorkerSummary(int(b), int(t), float(f)) for b, t, f in zip(blocks, tasks, finish)
    )
    trace = None
    if config.trace:
        trace = tuple(TraceSample(*row) for row in raw_trace)
    return SimResult(
        per_worker=per_worker,
        total_comm_blocks=int(total_comm),
        makespan=float(makespan),
        normalized_comm=total_comm / communication_lower_bound(problem, platform),
        beta=beta,
        trace=trace,
        backend=backend,
    )


def sample_knowledge_growth(result: SimResult, worker: int) -> list[tuple[float, float]]:
    """(x, unprocessed fraction) samples recorded at each cross allocation of
    one worker, where x is the known-row fraction just before the allocation."""
    if result.trace is None:
        raise ValueError("simulation was run without trace collection")
    return [(s.x, s.unprocessed_fraction) for s in result.trace if s.worker == worker]


def write_trace_csv(result: SimResult, destination: str | Path | IO[str]) -> None:
    if result.trace is None:
        raise ValueError("simulation was run without trace collection")
    lines = ["event_time,worker,x,unprocessed_fraction\n"]
    lines += [
        f"{s.time!r},{s.worker},{s.x!r},{s.unprocessed_fraction!r}\n" for s in result.trace
    ]
    text = "".join(lines)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)
