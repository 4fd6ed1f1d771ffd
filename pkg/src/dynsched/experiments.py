"""Batch experiment harness: sweeps over (n, p, strategy, scenario, beta),
seeded replications, aggregation, and CSV tables.

Seed discipline: every replication derives its platform stream and simulation
seed from the grid point's identity (kernel, n, p, strategy, scenario, beta,
replication index), so permuting or pruning the grid never changes any row.
Strategies at the same grid point face the same platform draws, which makes
strategy comparisons paired rather than independent.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, NamedTuple, Sequence

from .analysis import (
    AnalysisParams,
    admissible_beta_limit,
    beta_homogeneous,
    objective,
    optimize_beta,
)
from .engine import SimConfig, run_simulation
from .kernel import Problem, SimulationFault
from .platform import NO_DRIFT, Platform, jitter, make_discrete_platform, make_uniform_platform
from .rng import RandomStream
from .strategies import StrategyId


# --- scenarios ----------------------------------------------------------------

#: shorthand tokens for common speed distributions
SCENARIO_ALIASES = {
    "unif.1": "uniform:80:120",
    "unif.2": "uniform:50:150",
    "set.3": "set:80:100:150",
    "set.5": "set:40:80:100:150:200",
    "dyn.5": "dyn:80:120:0.05",
    "dyn.20": "dyn:80:120:0.2",
}


@dataclass(frozen=True)
class Scenario:
    """A speed-distribution recipe; ``label`` is its stable CSV token."""

    label: str
    kind: str  # "homogeneous" | "uniform" | "set" | "dyn"
    lo: float = 100.0
    hi: float = 100.0
    values: tuple[float, ...] = ()
    magnitude: float = 0.0

    def draw_platform(self, p: int, rng: RandomStream) -> Platform:
        drift = jitter(self.magnitude) if self.magnitude else NO_DRIFT
        if self.kind == "set":
            return make_discrete_platform(p, self.values, rng, drift)
        if self.kind == "homogeneous":
            return make_uniform_platform(p, self.lo, self.lo, None, drift)
        return make_uniform_platform(p, self.lo, self.hi, rng, drift)


def parse_scenario(token: str) -> Scenario:
    """Parse a scenario token.

    Grammar: ``homogeneous[:speed]`` | ``uniform:lo:hi`` | ``set:v1:v2[:...]``
    | ``dyn:lo:hi:magnitude``; the aliases in SCENARIO_ALIASES also work and
    keep their name as the label.
    """
    label = token
    parts = SCENARIO_ALIASES.get(token, token).split(":")
    head, args = parts[0], parts[1:]
    try:
        if head == "homogeneous" and len(args) <= 1:
            speed = float(args[0]) if args else 100.0
            if speed <= 0:
                raise ValueError("speed must be positive")
            return Scenario(label, "homogeneous", lo=speed, hi=speed)
        if head == "uniform" and len(args) == 2:
            lo, hi = float(args[0]), float(args[1])
            if not 0 < lo <= hi:
                raise ValueError("need 0 < lo <= hi")
            return Scenario(label, "homogeneous" if lo == hi else "uniform", lo=lo, hi=hi)
        if head == "set" and args:
            values = tuple(float(v) for v in args)
            if any(v <= 0 for v in values):
                raise ValueError("speeds must be positive")
            return Scenario(label, "set", values=values)
        if head == "dyn" and len(args) == 3:
            lo, hi, mag = (float(a) for a in args)
            if not 0 < lo <= hi:
                raise ValueError("need 0 < lo <= hi")
            if not 0 < mag < 1:
                raise ValueError("jitter magnitude must be in (0, 1)")
            return Scenario(label, "dyn", lo=lo, hi=hi, magnitude=mag)
    except ValueError as e:
        raise ValueError(f"bad scenario {label!r}: {e}") from None
    raise ValueError(f"unknown scenario: {label!r}")


def as_scenario(value: str | Scenario) -> Scenario:
    return value if isinstance(value, Scenario) else parse_scenario(value)


# --- experiment specification ---------------------------------------------------


@dataclass(frozen=True)
class BetaPolicy:
    """auto: homogeneous optimum; fixed: given value; sweep: grid of values."""

    mode: str
    value: float | None = None
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.mode not in ("auto", "fixed", "sweep"):
            raise ValueError(f"unknown beta mode: {self.mode!r}")
        if self.mode == "fixed" and (self.value is None or not self.value > 0):
            raise ValueError("fixed beta must be positive")
        if self.mode == "sweep" and not self.values:
            raise ValueError("empty beta sweep")

    @classmethod
    def auto(cls) -> BetaPolicy:
        return cls("auto")

    @classmethod
    def fixed(cls, value: float) -> BetaPolicy:
        return cls("fixed", value=float(value))

    @classmethod
    def sweep(cls, lo: float, hi: float, step: float) -> BetaPolicy:
        if not (0 < lo <= hi and step > 0):
            raise ValueError("need 0 < lo <= hi and step > 0")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return cls("sweep", values=tuple(lo + i * step for i in range(count)))


@dataclass(frozen=True)
class ExperimentSpec:
    kernel: str
    n_values: tuple[int, ...]
    p_values: tuple[int, ...]
    strategies: tuple[StrategyId, ...]
    scenario: Scenario
    beta: BetaPolicy = BetaPolicy.auto()
    replications: int = 10
    base_seed: int = 0
    name: str = ""

    def __post_init__(self):
        if not self.n_values or not self.p_values or not self.strategies:
            raise ValueError("sweep lists must be nonempty")
        if any(n < 1 for n in self.n_values) or any(p < 1 for p in self.p_values):
            raise ValueError("n and p must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for s in self.strategies:
            if s.kernel != self.kernel:
                raise ValueError(f"strategy {s.value} does not apply to {self.kernel}")
            if self.beta.mode == "sweep" and not s.is_two_phase:
                raise ValueError("beta sweeps apply to two-phase strategies only")


@dataclass(frozen=True)
class ReplicationStats:
    mean: float
    stddev: float
    count: int
    per_run: tuple[float, ...]

    @classmethod
    def from_values(cls, values: Sequence[float]) -> ReplicationStats:
        count = len(values)
        mean = sum(values) / count
        var = sum((v - mean) ** 2 for v in values) / count
        return cls(mean, math.sqrt(var), count, tuple(values))


# --- rows and CSV ----------------------------------------------------------------

CSV_COLUMNS = (
    "kernel",
    "n",
    "p",
    "strategy",
    "scenario",
    "beta",
    "mean_norm_comm",
    "stddev",
    "replications",
    "analysis_pred",
)


def _round6g(x: float) -> float:
    # project onto the 6-significant-digit grid used by the CSV format, so
    # emit/parse round-trips exactly
    return float(f"{x:.6g}")


@dataclass(frozen=True)
class SweepRow:
    kernel: str
    n: int
    p: int
    strategy: str
    scenario: str
    beta: float | None
    mean_norm_comm: float
    stddev: float
    replications: int
    analysis_pred: float | None


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6g}"


def emit_csv(rows: Sequence[SweepRow], destination: str | Path | IO[str]) -> None:
    if not rows:
        raise ValueError("empty table")
    lines = [",".join(CSV_COLUMNS) + "\n"]
    for r in rows:
        lines.append(
            f"{r.kernel},{r.n},{r.p},{r.strategy},{r.scenario},{_fmt(r.beta)},"
            f"{_fmt(r.mean_norm_comm)},{_fmt(r.stddev)},{r.replications},"
            f"{_fmt(r.analysis_pred)}\n"
        )
    text = "".join(lines)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")


def parse_csv(source: str | Path | IO[str]) -> list[SweepRow]:
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ValueError("not a sweep table: bad header")
    rows = []
    for line in lines[1:]:
        f = line.split(",")
        if len(f) != len(CSV_COLUMNS):
            raise ValueError(f"bad row: {line!r}")
        rows.append(
            SweepRow(
                kernel=f[0],
                n=int(f[1]),
                p=int(f[2]),
                strategy=f[3],
                scenario=f[4],
                beta=float(f[5]) if f[5] else None,
                mean_norm_comm=float(f[6]),
                stddev=float(f[7]),
                replications=int(f[8]),
                analysis_pred=float(f[9]) if f[9] else None,
            )
        )
    return rows


# --- sweep execution --------------------------------------------------------------


class _Point(NamedTuple):
    kernel: str
    n: int
    p: int
    strategy: str
    scenario: str
    beta_mode: str  # "auto" or "fixed"
    beta_value: float | None
    replications: int
    base_seed: int
    shared_platform: bool  # beta sweeps reuse one draw across beta and reps


def _run_point(point: _Point) -> SweepRow:
    strategy = StrategyId.parse(point.strategy)
    scenario = as_scenario(point.scenario)
    problem = Problem(point.kernel, point.n)
    root = RandomStream(point.base_seed)
    beta = None
    if strategy.is_two_phase:
        if point.beta_mode == "fixed":
            beta = point.beta_value
        else:
            beta = beta_homogeneous(point.kernel, point.n, point.p)
    beta_key = "" if beta is None else repr(beta)

    values = []
    preds = []
    # the model prediction is undefined when beta exceeds the admissible
    # limit for a drawn platform's fastest worker; such rows keep an empty
    # analysis_pred rather than a partial average
    pred_ok = strategy.is_two_phase
    for rep in range(point.replications):
        platform_keys = ["platform", point.kernel, point.n, point.p, point.scenario]
        if not point.shared_platform:
            platform_keys.append(rep)
        platform = scenario.draw_platform(point.p, root.derive(*platform_keys))
        seed = root.derive(
            "run", point.kernel, point.n, point.p, point.strategy, beta_key,
            point.scenario, rep,
        ).seed
        cfg = SimConfig(problem, platform, strategy, beta=beta, seed=seed)
        try:
            result = run_simulation(cfg)
        except SimulationFault as fault:
            raise SimulationFault(
                f"{fault} [kernel={point.kernel} n={point.n} p={point.p} "
                f"strategy={point.strategy} scenario={point.scenario} "
                f"beta={beta} rep={rep}]"
            ) from fault
        values.append(result.normalized_comm)
        if pred_ok:
            try:
                preds.append(
                    objective(beta, AnalysisParams.from_platform(point.kernel, point.n, platform))
                )
            except ValueError:
                pred_ok = False

    stats = ReplicationStats.from_values(values)
    return SweepRow(
        kernel=point.kernel,
        n=point.n,
        p=point.p,
        strategy=point.strategy,
        scenario=point.scenario,
        beta=None if beta is None else _round6g(beta),
        mean_norm_comm=_round6g(stats.mean),
        stddev=_round6g(stats.stddev),
        replications=stats.count,
        analysis_pred=_round6g(sum(preds) / len(preds)) if pred_ok and preds else None,
    )


def _map_points(points: Sequence[_Point], jobs: int) -> list[SweepRow]:
    if jobs <= 1 or len(points) <= 1:
        return [_run_point(pt) for pt in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, points))


def beta_sweep(
    kernel: str,
    p: int,
    n: int,
    scenario: str | Scenario,
    betas: Iterable[float],
    replications: int,
    seed: int,
    jobs: int = 1,
) -> list[SweepRow]:
    """Sweep the switch parameter on one fixed platform draw.

    All beta values (and all replications) run against the same speeds; only
    the simulation seed varies between replications.  The analytic optimum
    for the drawn platform is always added to the swept set, so the row
    achieving the predicted minimum is present in the table.
    """
    scenario = as_scenario(scenario)
    strategy = StrategyId.DYNAMIC_OUTER_2P if kernel == "outer" else StrategyId.DYNAMIC_MATMUL_2P
    platform = scenario.draw_platform(
        p, RandomStream(seed).derive("platform", kernel, n, p, scenario.label)
    )
    params = AnalysisParams.from_platform(kernel, n, platform)
    hi = min(12.0, admissible_beta_limit(params.rs))
    argmin = optimize_beta(params, bracket=(0.1, hi)).beta
    swept = sorted({float(b) for b in betas} | {argmin})
    points = [
        _Point(kernel, n, p, strategy.value, scenario.label, "fixed", b,
               replications, seed, True)
        for b in swept
    ]
    return _map_points(points, jobs)


def run_sweep(spec: ExperimentSpec, jobs: int = 1) -> list[SweepRow]:
    """Run every grid point of the spec; rows come back in grid order
    (n, then p, then strategy, then swept beta)."""
    rows: list[SweepRow] = []
    points: list[_Point] = []
    for n in spec.n_values:
        for p in spec.p_values:
            for strategy in spec.strategies:
                if spec.beta.mode == "sweep":
                    rows.extend(
                        beta_sweep(
                            spec.kernel, p, n, spec.scenario, spec.beta.values,
                            spec.replications, spec.base_seed, jobs,
                        )
                    )
                else:
                    points.append(
                        _Point(
                            spec.kernel, n, p, strategy.value, spec.scenario.label,
                            spec.beta.mode, spec.beta.value, spec.replications,
                            spec.base_seed, False,
                        )
                    )
    rows.extend(_map_points(points, jobs))
    return rows


# --- named figure recipes -----------------------------------------------------------

_P_RANGE = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
_OUTER_TRIO = (StrategyId.RANDOM_OUTER, StrategyId.SORTED_OUTER, StrategyId.DYNAMIC_OUTER)
_OUTER_ALL = _OUTER_TRIO + (StrategyId.DYNAMIC_OUTER_2P,)
_MATMUL_ALL = (
    StrategyId.RANDOM_MATMUL,
    StrategyId.SORTED_MATMUL,
    StrategyId.DYNAMIC_MATMUL,
    StrategyId.DYNAMIC_MATMUL_2P,
)


def _spec(kernel, n, strategies, ps=_P_RANGE, scenario="uniform:10:100", beta=None,
          reps=10, name=""):
    return ExperimentSpec(
        kernel=kernel,
        n_values=(n,),
        p_values=tuple(ps),
        strategies=strategies,
        scenario=parse_scenario(scenario),
        beta=beta or BetaPolicy.auto(),
        replications=reps,
        base_seed=0,
        name=name,
    )


def _hetero_specs(name: str, scenarios: Iterable[str]) -> tuple[ExperimentSpec, ...]:
    return tuple(
        _spec("outer", 100, _OUTER_ALL, ps=(20,), scenario=s, name=name)
        for s in scenarios
    )


RECIPES: dict[str, tuple[ExperimentSpec, ...]] = {
    # simple strategies versus the dynamic rule, n=100
    "fig2": (_spec("outer", 100, _OUTER_TRIO, name="fig2"),),
    # all outer strategies (the two-phase rows carry the analysis column)
    "fig5": (_spec("outer", 100, _OUTER_ALL, name="fig5"),),
    "fig6": (_spec("outer", 1000, _OUTER_ALL, name="fig6"),),
    # switch-parameter sweep on one fixed heterogeneous draw
    "fig7": (
        _spec("outer", 100, (StrategyId.DYNAMIC_OUTER_2P,), ps=(20,),
              beta=BetaPolicy.sweep(3.0, 6.0, 0.25), name="fig7"),
    ),
    # heterogeneity sweep: speeds U[100-h, 100+h]; h=100 would allow zero
    # speeds, so the sweep tops out at 95
    "fig8": _hetero_specs(
        "fig8",
        [f"uniform:{100 - h}:{100 + h}" for h in (0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 95)],
    ),
    "fig9": _hetero_specs(
        "fig9", ["unif.1", "unif.2", "set.3", "set.5", "dyn.5", "dyn.20"]
    ),
    "fig-mat-40": (_spec("matmul", 40, _MATMUL_ALL, name="fig-mat-40"),),
    "fig-mat-100": (_spec("matmul", 100, _MATMUL_ALL, name="fig-mat-100"),),
    "fig-mat-beta": (
        _spec("matmul", 40, (StrategyId.DYNAMIC_MATMUL_2P,), ps=(100,),
              beta=BetaPolicy.sweep(2.0, 5.0, 0.25), name="fig-mat-beta"),
    ),
}


def run_recipe(name: str, jobs: int = 1) -> list[SweepRow]:
    if name not in RECIPES:
        raise ValueError(f"unknown recipe: {name!r} (have: {', '.join(sorted(RECIPES))})")
    rows: list[SweepRow] = []
    for spec in RECIPES[name]:
        rows.extend(run_sweep(spec, jobs))
    return rows


# --- spec files -----------------------------------------------------------------


def load_spec(path: str | Path) -> ExperimentSpec:
    """Read an ExperimentSpec from a flat key-value file.

    One ``key = value`` pair per line; '#' starts a comment.  Keys: kernel,
    n, p, strategies (space-separated), scenario, beta (``auto``, a number,
    or ``sweep lo hi step``), replications, seed.  n and p accept
    space-separated lists.
    """
    path = Path(path)
    fields: dict[str, str] = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad spec line: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in fields:
            raise ValueError(f"duplicate key: {key}")
        fields[key] = value

    known = {"kernel", "n", "p", "strategies", "scenario", "beta", "replications", "seed"}
    unknown = set(fields) - known
    if unknown:
        raise ValueError(f"unknown spec keys: {', '.join(sorted(unknown))}")
    missing = {"kernel", "n", "p", "strategies", "scenario"} - set(fields)
    if missing:
        raise ValueError(f"missing spec keys: {', '.join(sorted(missing))}")

    beta_text = fields.get("beta", "auto")
    if beta_text == "auto":
        beta = BetaPolicy.auto()
    elif beta_text.startswith("sweep"):
        parts = beta_text.split()
        if len(parts) != 4:
            raise ValueError("beta sweep needs: sweep lo hi step")
        beta = BetaPolicy.sweep(float(parts[1]), float(parts[2]), float(parts[3]))
    else:
        beta = BetaPolicy.fixed(float(beta_text))

    return ExperimentSpec(
        kernel=fields["kernel"],
        n_values=tuple(int(v) for v in fields["n"].split()),
        p_values=tuple(int(v) for v in fields["p"].split()),
        strategies=tuple(StrategyId.parse(t) for t in fields["strategies"].split()),
        scenario=parse_scenario(fields["scenario"]),
        beta=beta,
        replications=int(fields.get("replications", "10")),
        base_seed=int(fields.get("seed", "0")),
        name=path.stem,
    )
