"""Problem geometry: tasks, input blocks, and the master's task ledger.

Outer product of two block vectors: task T(i,j) multiplies block a_i by block
b_j; n^2 tasks, block ids A(row=i) and B(row=j).  Block matrix multiplication:
task T(i,j,k) computes the contribution A[i,k] * B[k,j] to C[i,j]; n^3 tasks,
blocks A(i,k), B(k,j), C(i,j).  C blocks travel to whichever worker computes a
contribution; accumulation transfers back to the master are not counted, as
they are identical for every allocation policy.
"""
from __future__ import annotations

from bisect import insort
from dataclasses import dataclass
from typing import Iterable, NamedTuple

KINDS = ("outer", "matmul")


class SimulationFault(RuntimeError):
    """An engine invariant was violated (double allocation, livelock, ...)."""


@dataclass(frozen=True)
class Problem:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind: {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def dimensions(self) -> int:
        return 2 if self.kind == "outer" else 3


class TaskId(NamedTuple):
    i: int
    j: int
    k: int = 0


class BlockId(NamedTuple):
    array: str  # "A", "B" or "C"
    row: int
    col: int = 0


def total_tasks(problem: Problem) -> int:
    return problem.n ** problem.dimensions


def task_code(problem: Problem, task: TaskId) -> int:
    n = problem.n
    if problem.kind == "outer":
        return task.i * n + task.j
    return (task.i * n + task.j) * n + task.k


def task_from_code(problem: Problem, code: int) -> TaskId:
    n = problem.n
    if problem.kind == "outer":
        return TaskId(code // n, code % n)
    return TaskId(code // (n * n), (code // n) % n, code % n)


class TaskLedger:
    """Tracks which tasks are still unallocated.

    Internals support O(1) uniform draws and removals: ``_unprocessed`` is an
    unordered array of task codes and ``_pos`` maps a code to its slot (-1
    once processed).  ``first_unprocessed_code`` serves lexicographic
    allocation through a monotone scan pointer.  A task can be marked at most
    once; violations raise SimulationFault.
    """

    __slots__ = ("problem", "total", "remaining", "_unprocessed", "_pos", "_scan")

    def __init__(self, problem: Problem):
        self.problem = problem
        self.total = total_tasks(problem)
        self.remaining = self.total
        self._unprocessed = list(range(self.total))
        self._pos = list(range(self.total))
        self._scan = 0

    def is_processed_code(self, code: int) -> bool:
        return self._pos[code] < 0

    def is_processed(self, task: TaskId) -> bool:
        return self.is_processed_code(task_code(self.problem, task))

    def mark_processed_code(self, code: int) -> None:
        pos = self._pos[code]
        if pos < 0:
            raise SimulationFault(f"task code {code} allocated twice")
        last = self._unprocessed[-1]
        self._unprocessed[pos] = last
        self._pos[last] = pos
        self._unprocessed.pop()
        self._pos[code] = -1
        self.remaining -= 1

    def mark_processed(self, task: TaskId) -> None:
        self.mark_processed_code(task_code(self.problem, task))

    def draw_unprocessed_code(self, rng) -> int:
        if self.remaining == 0:
            raise SimulationFault("no unprocessed task left to draw")
        return self._unprocessed[rng.below(self.remaining)]

    def first_unprocessed_code(self) -> int:
        pos = self._pos
        code = self._scan
        while pos[code] < 0:
            code += 1
        self._scan = code
        return code

    @property
    def processed(self) -> set[TaskId]:
        # O(total); intended for small problems and tests
        return {
            task_from_code(self.problem, code)
            for code in range(self.total)
            if self._pos[code] < 0
        }

    def unprocessed_tasks(self) -> list[TaskId]:
        return [task_from_code(self.problem, code) for code in sorted(self._unprocessed)]


def merged(sorted_indices: list[int], extra: int | None) -> list[int]:
    if extra is None:
        return sorted_indices
    out = list(sorted_indices)
    insort(out, extra)
    return out


def tasks_for_cross_outer(
    I: list[int],
    J: list[int],
    i: int | None,
    j: int | None,
    ledger: TaskLedger,
) -> list[TaskId]:
    """Unprocessed tasks unlocked by extending known rows I with i and known
    columns J with j: the new row crossed with J + {j}, plus the new column
    crossed with I.  Row tasks come first, then column tasks, each by
    increasing index.  i or j may be None when the corresponding index set is
    already complete (half cross)."""
    n = ledger.problem.n
    pos = ledger._pos
    batch: list[TaskId] = []
    if i is not None:
        base = i * n
        for jj in merged(J, j):
            if pos[base + jj] >= 0:
                batch.append(TaskId(i, jj))
    if j is not None:
        for ii in I:
            if pos[ii * n + j] >= 0:
                batch.append(TaskId(ii, j))
    return batch


def tasks_for_cross_matmul(
    I: list[int],
    J: list[int],
    K: list[int],
    i: int | None,
    j: int | None,
    k: int | None,
    ledger: TaskLedger,
) -> list[TaskId]:
    """Unprocessed tasks in the extension of the known cube I x J x K by the
    new indices: the i plane over (J+{j}) x (K+{k}), then the j plane over
    I x (K+{k}), then the k plane over I x J; ascending indices within each
    plane.  Any of i, j, k may be None (complete dimension)."""
    n = ledger.problem.n
    pos = ledger._pos
    batch: list[TaskId] = []
    if i is not None:
        for jj in merged(J, j):
            base = (i * n + jj) * n
            for kk in merged(K, k):
                if pos[base + kk] >= 0:
                    batch.append(TaskId(i, jj, kk))
    if j is not None:
        for ii in I:
            base = (ii * n + j) * n
            for kk in merged(K, k):
                if pos[base + kk] >= 0:
                    batch.append(TaskId(ii, j, kk))
    if k is not None:
        for ii in I:
            for jj in J:
                if pos[(ii * n + jj) * n + k] >= 0:
                    batch.append(TaskId(ii, jj, k))
    return batch


def blocks_for_task(problem: Problem, task: TaskId) -> list[BlockId]:
    """Input blocks a task needs, in canonical A, B, C order."""
    if problem.kind == "outer":
        return [BlockId("A", task.i), BlockId("B", task.j)]
    return [
        BlockId("A", task.i, task.k),
        BlockId("B", task.k, task.j),
        BlockId("C", task.i, task.j),
    ]


def validate_indices(problem: Problem, indices: Iterable[int]) -> None:
    for v in indices:
        if not 0 <= v < problem.n:
            raise ValueError(f"index {v} out of range for n={problem.n}")
