"""Worker platforms: speed profiles and speed-drift policies.

Speeds are positive reals in arbitrary units; only relative speeds matter for
communication volumes.  A platform serializes to plain text, one speed per
line.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

from .rng import RandomStream

DRIFT_KINDS = ("none", "per-task-jitter")


@dataclass(frozen=True)
class DriftPolicy:
    """How a worker's speed evolves while it computes.

    ``per-task-jitter`` multiplies the worker's speed by a factor drawn
    uniformly from [1 - magnitude, 1 + magnitude] after every completed task.
    Speeds are never clamped; the multiplicative walk keeps them positive.
    """

    kind: str = "none"
    magnitude: float = 0.0

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise ValueError(f"unknown drift kind: {self.kind!r}")
        if self.kind == "none" and self.magnitude != 0.0:
            raise ValueError("drift 'none' must have magnitude 0")
        if self.kind == "per-task-jitter" and not 0.0 < self.magnitude < 1.0:
            raise ValueError("jitter magnitude must be in (0, 1)")


NO_DRIFT = DriftPolicy()


def jitter(magnitude: float) -> DriftPolicy:
    return DriftPolicy("per-task-jitter", magnitude)


@dataclass(frozen=True)
class Platform:
    speeds: tuple[float, ...]
    drift: DriftPolicy = field(default=NO_DRIFT)

    def __post_init__(self):
        if self.drift is None:
            object.__setattr__(self, "drift", NO_DRIFT)
        if not self.speeds:
            raise ValueError("platform needs at least one worker")
        if not all(s > 0 and s == s and s != float("inf") for s in self.speeds):
            raise ValueError("speeds must be positive finite reals")
        if not isinstance(self.speeds, tuple):
            object.__setattr__(self, "speeds", tuple(self.speeds))

    @property
    def p(self) -> int:
        return len(self.speeds)

    @property
    def total_speed(self) -> float:
        return sum(self.speeds)

    @property
    def relative_speeds(self) -> tuple[float, ...]:
        total = self.total_speed
        return tuple(s / total for s in self.speeds)


def make_uniform_platform(
    p: int, lo: float, hi: float, rng: RandomStream, drift: DriftPolicy = NO_DRIFT
) -> Platform:
    """Draw p speeds uniformly from [lo, hi); lo == hi gives a homogeneous platform."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if lo <= 0:
        raise ValueError("speeds must stay positive, need lo > 0")
    if lo == hi:
        return Platform((float(lo),) * p, drift)
    return Platform(tuple(rng.uniform(lo, hi) for _ in range(p)), drift)


def make_discrete_platform(
    p: int, values: Iterable[float], rng: RandomStream, drift: DriftPolicy = NO_DRIFT
) -> Platform:
    """Draw each worker's speed uniformly from a finite set of values."""
    pool = tuple(float(v) for v in values)
    if p < 1:
        raise ValueError("p must be >= 1")
    if not pool:
        raise ValueError("empty speed set")
    return Platform(tuple(pool[rng.below(len(pool))] for _ in range(p)), drift)


def drift_factor(magnitude: float, rng: RandomStream) -> float:
    # single multiplicative jitter step; shared by apply_drift and the engine
    return 1.0 - magnitude + 2.0 * magnitude * rng.uniform01()


def apply_drift(platform: Platform, worker: int, rng: RandomStream) -> Platform:
    """One post-task drift step for one worker, returning a new Platform."""
    if not 0 <= worker < platform.p:
        raise ValueError("worker index out of range")
    if platform.drift.kind == "none":
        return platform
    speeds = list(platform.speeds)
    speeds[worker] *= drift_factor(platform.drift.magnitude, rng)
    return Platform(tuple(speeds), platform.drift)


def save_speeds(platform: Platform, destination: str | Path | IO[str]) -> None:
    text = "".join(f"{s!r}\n" for s in platform.speeds)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)


def load_speeds(source: str | Path | IO[str], drift: DriftPolicy = NO_DRIFT) -> Platform:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    speeds = tuple(float(line) for line in text.split() if line)
    if not speeds:
        raise ValueError("no speeds found")
    return Platform(speeds, drift)
