"""Pure-Python simulation backend.

Reference implementation of the event loop; dynsched._simcore is its compiled
twin and must consume the identical random-variate sequence, so any change to
draw order or floating-point evaluation here has to be mirrored there.
"""
from __future__ import annotations

from heapq import heappop, heappush

from .kernel import Problem, SimulationFault
from .platform import Platform
from .rng import RandomStream
from .strategies import Allocation, StrategyId, allocator_for


def _apply_allocation(master, w, alloc: Allocation) -> None:
    problem = master.problem
    n = problem.n
    if problem.kind == "outer":
        for b in alloc.blocks:
            (w.known_I if b.array == "A" else w.known_J).add(b.row)
    else:
        for b in alloc.blocks:
            held = w.held_a if b.array == "A" else w.held_b if b.array == "B" else w.held_c
            idx = b.row * n + b.col
            if held[idx]:
                raise SimulationFault(f"block {b} transferred twice to worker {w.id}")
            held[idx] = 1
        if alloc.extends is not None:
            i, j, k = alloc.extends
            if i is not None:
                w.known_I.add(i)
            if j is not None:
                w.known_J.add(j)
            if k is not None:
                w.known_K.add(k)
    w.blocks_received += len(alloc.blocks)

    ledger = master.ledger
    if problem.kind == "outer":
        for t in alloc.batch:
            if t.i not in w.known_I or t.j not in w.known_J:
                raise SimulationFault(f"task {t} allocated without its inputs")
            ledger.mark_processed_code(t.i * n + t.j)
    else:
        ha, hb, hc = w.held_a, w.held_b, w.held_c
        for t in alloc.batch:
            if not (ha[t.i * n + t.k] and hb[t.k * n + t.j] and hc[t.i * n + t.j]):
                raise SimulationFault(f"task {t} allocated without its inputs")
            ledger.mark_processed_code((t.i * n + t.j) * n + t.k)
    w.tasks_done += len(alloc.batch)


def simulate(
    problem: Problem,
    platform: Platform,
    strategy: StrategyId,
    threshold: int,
    seed_state: int,
    want_trace: bool,
):
    from .engine import EMPTY_BATCH_LIMIT, MasterState

    master = MasterState(problem, platform)
    allocate = allocator_for(strategy, threshold)
    rng = RandomStream(seed_state)
    magnitude = platform.drift.magnitude
    speeds = master.speeds
    ledger = master.ledger
    n = problem.n
    dims = problem.dimensions
    total_positions = ledger.total
    trace: list[tuple[float, int, float, float]] | None = [] if want_trace else None

    heap: list[tuple[float, int]] = [(0.0, k) for k in range(platform.p)]
    while ledger.remaining > 0:
        t, k = heappop(heap)
        w = master.workers[k]
        alloc = allocate(master, k, rng)

        if trace is not None and alloc.extends is not None:
            square = len(w.known_I) * len(w.known_J)
            if dims == 3:
                square *= len(w.known_K)
            trace.append(
                (t, k, len(w.known_I) / n, ledger.remaining / (total_positions - square))
            )

        _apply_allocation(master, w, alloc)

        if alloc.batch:
            w.queue = alloc.batch
            s = speeds[k]
            if magnitude > 0.0:
                for _ in alloc.batch:
                    t += 1.0 / s
                    s = s * (1.0 - magnitude + 2.0 * magnitude * rng.uniform01())
                speeds[k] = s
            else:
                inv = 1.0 / s
                for _ in alloc.batch:
                    t += inv
            w.busy_until = t
            w.queue = []
            w.empty_streak = 0
        else:
            w.empty_streak += 1
            if w.empty_streak >= EMPTY_BATCH_LIMIT:
                raise SimulationFault(
                    f"worker {k} got {w.empty_streak} consecutive empty batches"
                )
        heappush(heap, (w.busy_until, k))

    blocks = [w.blocks_received for w in master.workers]
    tasks = [w.tasks_done for w in master.workers]
    finish = [w.busy_until for w in master.workers]
    return blocks, tasks, finish, sum(blocks), max(finish), trace
