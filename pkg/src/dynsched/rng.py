"""Deterministic, splittable random streams.

The simulator must replay identically across the pure-Python and compiled
backends, so the generator is a fixed splitmix64 recurrence rather than a
library generator whose bounded-draw algorithm could differ between the two
implementations.  Streams are derived by name: children are independent of
how much the parent has been consumed, which keeps the platform draw
untouched when the simulation consumes a different number of variates.
"""
from __future__ import annotations

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
# 2^-53, the spacing of doubles in [0.5, 1)
_TO_DOUBLE = 1.0 / 9007199254740992.0


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


class RandomStream:
    """A named splitmix64 stream.

    ``derive`` builds a child stream from the parent's seed (not its current
    state) and a sequence of integer or string keys, so the same name always
    yields the same child.
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed & _MASK
        self._state = self.seed

    @property
    def state(self) -> int:
        return self._state

    def derive(self, *keys: int | str) -> RandomStream:
        h = _mix(self.seed ^ _GAMMA)
        for key in keys:
            if isinstance(key, str):
                k = _fnv1a(key.encode("utf-8"))
            elif isinstance(key, int):
                k = key & _MASK
            else:
                raise TypeError(f"unsupported derivation key: {key!r}")
            h = _mix(h ^ k)
        return RandomStream(h)

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def below(self, bound: int) -> int:
        # modulo draw; bias is < bound/2^64, irrelevant at simulator scales
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound

    def uniform01(self) -> float:
        return (self.next_u64() >> 11) * _TO_DOUBLE

    def uniform(self, lo: float, hi: float) -> float:
        if not lo < hi:
            raise ValueError("empty interval")
        return lo + (hi - lo) * self.uniform01()

    def choice(self, items):
        return items[self.below(len(items))]
