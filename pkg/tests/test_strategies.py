import pytest

from dynsched._pysim import _apply_allocation
from dynsched.engine import MasterState
from dynsched.kernel import BlockId, Problem, TaskId, task_code
from dynsched.platform import make_uniform_platform
from dynsched.rng import RandomStream
from dynsched.strategies import (
    ALL_STRATEGIES,
    MATMUL_STRATEGIES,
    OUTER_STRATEGIES,
    StrategyId,
    allocate_dynamic_matmul,
    allocate_dynamic_outer,
    allocate_random,
    allocate_sorted,
    allocate_two_phase,
    allocator_for,
    worker_holds,
)


class ScriptedRng:
    """Feeds a fixed list of draw positions to ``below``."""

    def __init__(self, picks):
        self.picks = list(picks)

    def below(self, bound):
        v = self.picks.pop(0)
        assert 0 <= v < bound
        return v


def make_master(kind, n, p=1):
    problem = Problem(kind, n)
    platform = make_uniform_platform(p, 1.0, 1.0, None)
    return MasterState(problem, platform)


def test_parse_round_trip():
    for s in ALL_STRATEGIES:
        assert StrategyId.parse(s.value) is s
    with pytest.raises(ValueError):
        StrategyId.parse("greedy")


def test_strategy_flags():
    assert len(OUTER_STRATEGIES) == len(MATMUL_STRATEGIES) == 4
    assert StrategyId.DYNAMIC_OUTER_2P.kernel == "outer"
    assert StrategyId.RANDOM_MATMUL.kernel == "matmul"
    assert StrategyId.DYNAMIC_MATMUL_2P.is_two_phase
    assert not StrategyId.DYNAMIC_MATMUL.is_two_phase
    assert StrategyId.DYNAMIC_OUTER.is_dynamic
    assert StrategyId.SORTED_OUTER.is_sorted
    assert not StrategyId.RANDOM_OUTER.is_dynamic


def test_allocate_random_sends_only_missing_blocks():
    master = make_master("outer", 3)
    master.workers[0].known_I.add(1)
    alloc = allocate_random(master, 0, ScriptedRng([5]))  # code 5 = T(1,2)
    assert alloc.batch == [TaskId(1, 2)]
    assert alloc.blocks == [BlockId("B", 2)]
    assert alloc.extends is None


def test_allocate_sorted_walks_lexicographically():
    master = make_master("outer", 2)
    rng = RandomStream(0)
    seen = []
    for _ in range(4):
        alloc = allocate_sorted(master, 0, rng)
        seen += alloc.batch
        _apply_allocation(master, master.workers[0], alloc)
    assert seen == [TaskId(0, 0), TaskId(0, 1), TaskId(1, 0), TaskId(1, 1)]
    # first task ships two blocks, the rest reuse one held input
    assert master.workers[0].blocks_received == 2 + 1 + 1 + 0


def test_dynamic_outer_first_allocation():
    master = make_master("outer", 3)
    alloc = allocate_dynamic_outer(master, 0, ScriptedRng([1, 2]))
    assert alloc.blocks == [BlockId("A", 1), BlockId("B", 2)]
    assert alloc.batch == [TaskId(1, 2)]
    assert alloc.extends == (1, 2, None)


def test_dynamic_outer_cross_contents():
    master = make_master("outer", 4)
    w = master.workers[0]
    rng = RandomStream(123)
    for _ in range(2):
        _apply_allocation(master, w, allocate_dynamic_outer(master, 0, rng))
    y = len(w.known_I)
    alloc = allocate_dynamic_outer(master, 0, rng)
    assert len(alloc.batch) == 2 * y + 1  # nothing processed by other workers
    i, j, _ = alloc.extends
    assert i not in w.known_I and j not in w.known_J
    row = [t for t in alloc.batch if t.i == i]
    assert len(row) == y + 1


def test_dynamic_outer_half_cross_when_rows_complete():
    master = make_master("outer", 3)
    w = master.workers[0]
    for v in range(3):
        w.known_I.add(v)
    w.known_J.add(0)
    # complement of J after swap-remove of 0 is [2, 1]; position 0 picks 2
    alloc = allocate_dynamic_outer(master, 0, ScriptedRng([0]))
    assert alloc.extends[0] is None
    assert alloc.blocks == [BlockId("B", 2)]
    assert alloc.batch == [TaskId(0, 2), TaskId(1, 2), TaskId(2, 2)]


def test_dynamic_outer_falls_back_to_random_when_saturated():
    master = make_master("outer", 3)
    w = master.workers[0]
    for v in range(3):
        w.known_I.add(v)
        w.known_J.add(v)
    reference = make_master("outer", 3)
    for v in range(3):
        reference.workers[0].known_I.add(v)
        reference.workers[0].known_J.add(v)
    alloc = allocate_dynamic_outer(master, 0, RandomStream(7))
    expected = allocate_random(reference, 0, RandomStream(7))
    assert alloc == expected
    assert alloc.extends is None and alloc.blocks == []


def test_dynamic_outer_draws_uniformly():
    master = make_master("outer", 4)
    master.workers[0].known_I.add(0)
    rng = RandomStream(99)
    draws = 12_000
    counts = {}
    for _ in range(draws):
        alloc = allocate_dynamic_outer(master, 0, rng)
        i, j, _ = alloc.extends
        counts[(i, j)] = counts.get((i, j), 0) + 1
    assert set(counts) == {(i, j) for i in (1, 2, 3) for j in range(4)}
    expected = draws / 12
    sigma = (draws * (1 / 12) * (11 / 12)) ** 0.5
    assert all(abs(c - expected) < 5 * sigma for c in counts.values())


def test_dynamic_matmul_growth_block_and_task_counts():
    n = 5
    master = make_master("matmul", n)
    w = master.workers[0]
    rng = RandomStream(17)
    for y in range(n):
        alloc = allocate_dynamic_matmul(master, 0, rng)
        assert len(alloc.blocks) == 3 * (2 * y + 1)
        assert len(alloc.batch) == (y + 1) ** 3 - y**3
        assert alloc.extends is not None and None not in alloc.extends
        _apply_allocation(master, w, alloc)
    assert w.blocks_received == 3 * n * n
    assert w.tasks_done == n**3
    assert master.ledger.remaining == 0


def test_dynamic_matmul_block_identities():
    master = make_master("matmul", 3)
    alloc = allocate_dynamic_matmul(master, 0, ScriptedRng([0, 1, 2]))
    assert alloc.extends == (0, 1, 2)
    assert alloc.blocks == [
        BlockId("A", 0, 2),
        BlockId("B", 2, 1),
        BlockId("C", 0, 1),
    ]
    assert alloc.batch == [TaskId(0, 1, 2)]


def test_dynamic_matmul_partial_saturation_draws_remaining_dims():
    master = make_master("matmul", 2)
    w = master.workers[0]
    for v in range(2):
        w.known_I.add(v)
        w.known_K.add(v)
    for idx in range(4):
        w.held_a[idx] = 1
    # only J can grow; blocks limited to the new column of B and C
    alloc = allocate_dynamic_matmul(master, 0, ScriptedRng([0]))
    i, j, k = alloc.extends
    assert i is None and k is None and j == 0
    assert all(b.array in ("B", "C") for b in alloc.blocks)
    assert {t.j for t in alloc.batch} == {0}
    assert len(alloc.batch) == 4  # full plane I x {0} x K


def test_dynamic_matmul_falls_back_when_cube_complete():
    master = make_master("matmul", 2)
    w = master.workers[0]
    for v in range(2):
        w.known_I.add(v)
        w.known_J.add(v)
        w.known_K.add(v)
    for idx in range(4):
        w.held_a[idx] = w.held_b[idx] = w.held_c[idx] = 1
    alloc = allocate_dynamic_matmul(master, 0, RandomStream(3))
    assert alloc.extends is None
    assert alloc.blocks == [] and len(alloc.batch) == 1


def test_two_phase_switches_exactly_at_threshold():
    def drained_master():
        m = make_master("outer", 3)
        for code in range(5):
            m.ledger.mark_processed_code(code)
        return m  # remaining == 4

    dyn = allocate_two_phase(drained_master(), 0, RandomStream(1), threshold=3)
    assert dyn.extends is not None
    rnd = allocate_two_phase(drained_master(), 0, RandomStream(1), threshold=4)
    assert rnd.extends is None and len(rnd.batch) == 1


def test_two_phase_matches_pure_strategies_at_extremes():
    dyn = allocate_two_phase(make_master("outer", 4), 0, RandomStream(5), threshold=0)
    assert dyn == allocate_dynamic_outer(make_master("outer", 4), 0, RandomStream(5))
    total = 16
    rnd = allocate_two_phase(make_master("outer", 4), 0, RandomStream(5), threshold=total)
    assert rnd == allocate_random(make_master("outer", 4), 0, RandomStream(5))


def test_allocator_for_dispatch():
    assert allocator_for(StrategyId.RANDOM_OUTER, 0) is allocate_random
    assert allocator_for(StrategyId.SORTED_MATMUL, 0) is allocate_sorted
    assert allocator_for(StrategyId.DYNAMIC_OUTER, 0) is allocate_dynamic_outer
    assert allocator_for(StrategyId.DYNAMIC_MATMUL, 0) is allocate_dynamic_matmul
    wrapped = allocator_for(StrategyId.DYNAMIC_OUTER_2P, threshold=999)
    master = make_master("outer", 3)  # 9 tasks <= threshold: random phase
    assert wrapped(master, 0, RandomStream(2)).extends is None


def test_worker_holds_matmul_arrays():
    master = make_master("matmul", 2)
    master.workers[0].held_b[1 * 2 + 0] = 1
    assert worker_holds(master, 0, BlockId("B", 1, 0))
    assert not worker_holds(master, 0, BlockId("A", 1, 0))
