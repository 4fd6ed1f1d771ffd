"""Task allocation strategies.

Each allocator is a pure decision function (master state, worker id, rng) ->
Allocation; the engine applies the returned transfers and batch.  The dynamic
allocators extend the worker's known index sets by fresh indices drawn
uniformly from the complements and allocate every unprocessed task that the
extension unlocks.  Two-phase variants run the dynamic rule until the number
of remaining tasks drops to a threshold, then switch to random allocation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable

from .kernel import (
    BlockId,
    TaskId,
    blocks_for_task,
    task_from_code,
    tasks_for_cross_matmul,
    tasks_for_cross_outer,
)
from .rng import RandomStream

if TYPE_CHECKING:  # engine imports this module at runtime
    from .engine import MasterState


class StrategyId(Enum):
    RANDOM_OUTER = "random-outer"
    SORTED_OUTER = "sorted-outer"
    DYNAMIC_OUTER = "dynamic-outer"
    DYNAMIC_OUTER_2P = "dynamic-outer-2p"
    RANDOM_MATMUL = "random-matrix"
    SORTED_MATMUL = "sorted-matrix"
    DYNAMIC_MATMUL = "dynamic-matrix"
    DYNAMIC_MATMUL_2P = "dynamic-matrix-2p"

    @classmethod
    def parse(cls, token: str) -> StrategyId:
        for member in cls:
            if member.value == token:
                return member
        raise ValueError(f"unknown strategy: {token!r}")

    @property
    def kernel(self) -> str:
        return "matmul" if "matrix" in self.value else "outer"

    @property
    def is_two_phase(self) -> bool:
        return self.value.endswith("-2p")

    @property
    def is_dynamic(self) -> bool:
        return self.value.startswith("dynamic")

    @property
    def is_sorted(self) -> bool:
        return self.value.startswith("sorted")


ALL_STRATEGIES = tuple(StrategyId)
OUTER_STRATEGIES = tuple(s for s in StrategyId if s.kernel == "outer")
MATMUL_STRATEGIES = tuple(s for s in StrategyId if s.kernel == "matmul")


@dataclass
class Allocation:
    """Blocks to transfer and tasks to execute, in canonical order.

    ``extends`` records the indices by which a dynamic allocator grew the
    worker's known sets (None per dimension when the complement was empty);
    it stays None for random and sorted decisions.
    """

    blocks: list[BlockId] = field(default_factory=list)
    batch: list[TaskId] = field(default_factory=list)
    extends: tuple[int | None, int | None, int | None] | None = None


def worker_holds(master: MasterState, worker: int, block: BlockId) -> bool:
    w = master.workers[worker]
    if master.problem.kind == "outer":
        members = w.known_I if block.array == "A" else w.known_J
        return block.row in members
    held = {"A": w.held_a, "B": w.held_b, "C": w.held_c}[block.array]
    return held[block.row * master.problem.n + block.col] != 0


def allocate_random(master: MasterState, worker: int, rng: RandomStream) -> Allocation:
    code = master.ledger.draw_unprocessed_code(rng)
    task = task_from_code(master.problem, code)
    blocks = [b for b in blocks_for_task(master.problem, task) if not worker_holds(master, worker, b)]
    return Allocation(blocks, [task])


def allocate_sorted(master: MasterState, worker: int, rng: RandomStream) -> Allocation:
    code = master.ledger.first_unprocessed_code()
    task = task_from_code(master.problem, code)
    blocks = [b for b in blocks_for_task(master.problem, task) if not worker_holds(master, worker, b)]
    return Allocation(blocks, [task])


def allocate_dynamic_outer(master: MasterState, worker: int, rng: RandomStream) -> Allocation:
    w = master.workers[worker]
    i = w.known_I.draw_complement(rng)
    j = w.known_J.draw_complement(rng)
    if i is None and j is None:
        # worker already knows every row and column
        return allocate_random(master, worker, rng)
    blocks = []
    if i is not None:
        blocks.append(BlockId("A", i))
    if j is not None:
        blocks.append(BlockId("B", j))
    batch = tasks_for_cross_outer(w.known_I.ordered, w.known_J.ordered, i, j, master.ledger)
    return Allocation(blocks, batch, extends=(i, j, None))


def allocate_dynamic_matmul(master: MasterState, worker: int, rng: RandomStream) -> Allocation:
    w = master.workers[worker]
    n = master.problem.n
    i = w.known_I.draw_complement(rng)
    j = w.known_J.draw_complement(rng)
    k = w.known_K.draw_complement(rng)
    if i is None and j is None and k is None:
        return allocate_random(master, worker, rng)
    I, J, K = w.known_I.ordered, w.known_J.ordered, w.known_K.ordered
    new_J = J if j is None else sorted(J + [j])
    new_K = K if k is None else sorted(K + [k])
    blocks = []
    # A blocks: new row i over all known layers, then old rows at the new layer
    if i is not None:
        blocks += [BlockId("A", i, kk) for kk in new_K]
    if k is not None:
        blocks += [BlockId("A", ii, k) for ii in I]
    # B blocks
    if j is not None:
        blocks += [BlockId("B", kk, j) for kk in new_K]
    if k is not None:
        blocks += [BlockId("B", k, jj) for jj in J]
    # C blocks
    if i is not None:
        blocks += [BlockId("C", i, jj) for jj in new_J]
    if j is not None:
        blocks += [BlockId("C", ii, j) for ii in I]
    blocks = [b for b in blocks if not worker_holds(master, worker, b)]
    batch = tasks_for_cross_matmul(I, J, K, i, j, k, master.ledger)
    return Allocation(blocks, batch, extends=(i, j, k))


def allocate_two_phase(
    master: MasterState, worker: int, rng: RandomStream, threshold: int
) -> Allocation:
    if master.ledger.remaining > threshold:
        if master.problem.kind == "outer":
            return allocate_dynamic_outer(master, worker, rng)
        return allocate_dynamic_matmul(master, worker, rng)
    return allocate_random(master, worker, rng)


Allocator = Callable[["MasterState", int, RandomStream], Allocation]


def allocator_for(strategy: StrategyId, threshold: int) -> Allocator:
    """Bind a StrategyId to its decision function.

    ``threshold`` is the two-phase switch point in remaining tasks; it is
    ignored by the other strategies.
    """
    if strategy in (StrategyId.RANDOM_OUTER, StrategyId.RANDOM_MATMUL):
        return allocate_random
    if strategy in (StrategyId.SORTED_OUTER, StrategyId.SORTED_MATMUL):
        return allocate_sorted
    if strategy is StrategyId.DYNAMIC_OUTER:
        return allocate_dynamic_outer
    if strategy is StrategyId.DYNAMIC_MATMUL:
        return allocate_dynamic_matmul
    return lambda master, worker, rng: allocate_two_phase(master, worker, rng, threshold)
