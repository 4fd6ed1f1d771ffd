"""Closed-form model of the two-phase dynamic strategies.

Notation: rs_k is worker k's relative speed (rs sums to 1), n the number of
blocks per dimension, d the kernel dimension (2 for outer product, 3 for
matrix multiplication).  During the dynamic phase a worker that knows a
fraction x of the indices in each dimension sees a fraction

    g_k(x) = (1 - x^d)^alpha_k,   alpha_k = (1 - rs_k) / rs_k

of the tasks outside its known square (cube) still unprocessed, and it
reaches knowledge x at the moment the first e^(-beta) fraction of tasks
remains when

    x_k = (beta rs_k - beta^2/2 rs_k^2)^(1/d).

Communication volumes are counted in blocks and normalized by the lower bound
(2 n sum sqrt(rs_k) for outer, 3 n^2 sum rs_k^(2/3) for matmul).  ``objective``
uses the first-order expansion of the volumes in rs_k; its argmin is the
recommended switch parameter.  The exact per-worker volume forms are exposed
separately for diagnostics and sensitivity checks.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .kernel import KINDS


def _dim(kernel: str) -> int:
    if kernel not in KINDS:
        raise ValueError(f"unknown kernel kind: {kernel!r}")
    return 2 if kernel == "outer" else 3


def _check_rs(rs: Sequence[float]) -> None:
    if not rs:
        raise ValueError("need at least one relative speed")
    if any(not 0.0 < r <= 1.0 for r in rs):
        raise ValueError("relative speeds must lie in (0, 1]")
    if abs(sum(rs) - 1.0) > 1e-9:
        raise ValueError("relative speeds must sum to 1")


@dataclass(frozen=True)
class AnalysisParams:
    kernel: str
    n: int
    rs: tuple[float, ...]

    def __post_init__(self):
        _dim(self.kernel)
        if self.n < 1:
            raise ValueError("n must be >= 1")
        _check_rs(self.rs)

    @classmethod
    def homogeneous(cls, kernel: str, n: int, p: int) -> AnalysisParams:
        return cls(kernel, n, (1.0 / p,) * p)

    @classmethod
    def from_platform(cls, kernel: str, n: int, platform) -> AnalysisParams:
        return cls(kernel, n, platform.relative_speeds)


@dataclass(frozen=True)
class BetaResult:
    beta: float
    objective_value: float
    phase1_fraction: float


def lower_bound_outer(rs: Iterable[float], n: int) -> float:
    return 2.0 * n * sum(math.sqrt(r) for r in rs)


def lower_bound_matmul(rs: Iterable[float], n: int) -> float:
    return 3.0 * n * n * sum(r ** (2.0 / 3.0) for r in rs)


def alpha(rs_k: float) -> float:
    return (1.0 - rs_k) / rs_k


def g(x: float, alpha_k: float, kernel: str) -> float:
    """Fraction of the tasks outside the known square/cube still unprocessed."""
    d = _dim(kernel)
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    return (1.0 - x**d) ** alpha_k


def t_fraction(x: float, rs_k: float, n: int, kernel: str) -> float:
    """Tasks processed globally (by everyone) by the time worker k knows a
    fraction x of each dimension, scaled to n^d total tasks."""
    d = _dim(kernel)
    a = alpha(rs_k)
    return n**d * (1.0 - (1.0 - x**d) ** (a + 1.0))


def switch_fraction(beta: float, rs_k: float, kernel: str) -> float:
    """Knowledge fraction x_k of worker k at the phase switch."""
    d = _dim(kernel)
    radicand = beta * rs_k - 0.5 * beta * beta * rs_k * rs_k
    if radicand < 0.0:
        raise ValueError(f"beta {beta} is too large for relative speed {rs_k}")
    x = radicand ** (1.0 / d)
    if x > 1.0:
        raise ValueError("switch fraction exceeds 1")
    return x


def phase1_volume_outer(beta: float, rs: Sequence[float], n: int) -> float:
    # one row block plus one column block per cross draw: 2 n x_k per worker
    return sum(2.0 * n * switch_fraction(beta, r, "outer") for r in rs)


def phase2_volume_outer(beta: float, rs: Sequence[float], n: int) -> float:
    # a worker that knows a fraction x of rows and columns pays 2/(1+x)
    # blocks on average for a task drawn uniformly outside its known square
    remaining = math.exp(-beta) * n * n
    return remaining * sum(
        r * 2.0 / (1.0 + switch_fraction(beta, r, "outer")) for r in rs
    )


def phase_volumes_matmul(beta: float, rs: Sequence[float], n: int) -> tuple[float, float]:
    # phase 1: the known cube of side x n costs 3 (x n)^2 blocks; phase 2: a
    # task outside the cube needs 3 blocks minus those already held, which is
    # 3 (1+x) / (1 + x + x^2) on average
    v1 = 0.0
    v2_per_task = 0.0
    for r in rs:
        x = switch_fraction(beta, r, "matmul")
        v1 += 3.0 * n * n * x * x
        v2_per_task += r * 3.0 * (1.0 + x) / (1.0 + x + x * x)
    return v1, math.exp(-beta) * n**3 * v2_per_task


def objective(beta: float, params: AnalysisParams) -> float:
    """Predicted total communication divided by the lower bound.

    Computed from the exact per-worker phase volumes; this is the quantity
    the simulation's normalized communication should track.
    """
    if not beta > 0.0:
        raise ValueError("beta must be positive")
    n, rs = params.n, params.rs
    if params.kernel == "outer":
        v = phase1_volume_outer(beta, rs, n) + phase2_volume_outer(beta, rs, n)
        return v / lower_bound_outer(rs, n)
    v1, v2 = phase_volumes_matmul(beta, rs, n)
    return (v1 + v2) / lower_bound_matmul(rs, n)


def objective_first_order(beta: float, params: AnalysisParams) -> float:
    """The same ratio expanded to first order in the relative speeds.

    This is the expression whose minimum defines the recommended switch
    parameter; both kernels follow the same recipe: normalized phase-1
    volume with its leading correction, plus the e^(-beta) tail of tasks
    served at the uninformed per-task block cost.
    """
    if not beta > 0.0:
        raise ValueError("beta must be positive")
    n = params.n
    if params.kernel == "outer":
        s1 = sum(r**0.5 for r in params.rs)
        s3 = sum(r**1.5 for r in params.rs)
        return (
            math.sqrt(beta)
            - beta**1.5 * s3 / (4.0 * s1)
            + math.exp(-beta) * n * (1.0 - math.sqrt(beta) * s3) / s1
        )
    s2 = sum(r ** (2.0 / 3.0) for r in params.rs)
    s5 = sum(r ** (5.0 / 3.0) for r in params.rs)
    return (
        beta ** (2.0 / 3.0)
        - beta ** (5.0 / 3.0) * s5 / s2
        + math.exp(-beta) * n * (1.0 - beta ** (2.0 / 3.0) * s5) / s2
    )


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def admissible_beta_limit(rs: Sequence[float]) -> float:
    # switch_fraction's radicand stays non-negative for beta <= 2 / max(rs)
    return 2.0 / max(rs)


def optimize_beta(
    params: AnalysisParams, bracket: tuple[float, float] = (0.1, 12.0), tol: float = 1e-4
) -> BetaResult:
    """Golden-section search for the optimal switch parameter.

    The argmin is taken over the first-order ratio (whose minimum defines
    the recommendation); the reported objective_value is the exact predicted
    ratio at that beta.
    """
    lo, hi = bracket
    if not 0.0 < lo < hi:
        raise ValueError("invalid bracket")
    limit = admissible_beta_limit(params.rs)
    if hi > limit:
        warnings.warn(
            f"upper bracket {hi} shrunk to {limit:.4g}: larger beta has no valid "
            "switch fraction for the fastest worker",
            stacklevel=2,
        )
        hi = limit
        if lo >= hi:
            raise ValueError("no admissible beta in the bracket")
    beta, _ = _golden_section(lambda b: objective_first_order(b, params), lo, hi, tol)
    return BetaResult(
        beta=beta,
        objective_value=objective(beta, params),
        phase1_fraction=1.0 - math.exp(-beta),
    )


@lru_cache(maxsize=None)
def _beta_homogeneous_cached(kernel: str, n: int, p: int) -> float:
    params = AnalysisParams.homogeneous(kernel, n, p)
    hi = min(12.0, admissible_beta_limit(params.rs))
    return optimize_beta(params, bracket=(0.1, hi)).beta


def beta_homogeneous(kernel: str, n: int, p: int) -> float:
    """Switch parameter optimized as if the p workers had equal speeds."""
    return _beta_homogeneous_cached(kernel, n, p)
