"""Event-driven simulator and analytic model for dynamic task allocation of
block outer-product and matrix-multiplication kernels on heterogeneous
master-worker platforms."""

from .analysis import (
    AnalysisParams,
    BetaResult,
    alpha,
    beta_homogeneous,
    g,
    lower_bound_matmul,
    lower_bound_outer,
    objective,
    objective_first_order,
    optimize_beta,
    phase1_volume_outer,
    phase2_volume_outer,
    phase_volumes_matmul,
    switch_fraction,
    t_fraction,
)
from .engine import (
    SimConfig,
    SimResult,
    TraceSample,
    WorkerSummary,
    default_backend,
    phase_threshold,
    run_simulation,
    sample_knowledge_growth,
    write_trace_csv,
)
from .experiments import (
    BetaPolicy,
    ExperimentSpec,
    RECIPES,
    Scenario,
    SweepRow,
    beta_sweep,
    emit_csv,
    load_spec,
    parse_csv,
    parse_scenario,
    run_recipe,
    run_sweep,
)
from .kernel import (
    BlockId,
    Problem,
    SimulationFault,
    TaskId,
    TaskLedger,
    tasks_for_cross_matmul,
    tasks_for_cross_outer,
    total_tasks,
)
from .platform import (
    DriftPolicy,
    NO_DRIFT,
    Platform,
    apply_drift,
    jitter,
    load_speeds,
    make_discrete_platform,
    make_uniform_platform,
    save_speeds,
)
from .rng import RandomStream
from .strategies import (
    Allocation,
    StrategyId,
    allocate_dynamic_matmul,
    allocate_dynamic_outer,
    allocate_random,
    allocate_sorted,
    allocate_two_phase,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisParams",
    "Allocation",
    "BetaPolicy",
    "BetaResult",
    "BlockId",
    "DriftPolicy",
    "ExperimentSpec",
    "NO_DRIFT",
    "Platform",
    "Problem",
    "RECIPES",
    "RandomStream",
    "Scenario",
    "SimConfig",
    "SimResult",
    "SimulationFault",
    "StrategyId",
    "SweepRow",
    "TaskId",
    "TaskLedger",
    "TraceSample",
    "WorkerSummary",
    "alpha",
    "allocate_dynamic_matmul",
    "allocate_dynamic_outer",
    "allocate_random",
    "allocate_sorted",
    "allocate_two_phase",
    "apply_drift",
    "beta_homogeneous",
    "beta_sweep",
    "default_backend",
    "emit_csv",
    "g",
    "jitter",
    "load_spec",
    "load_speeds",
    "lower_bound_matmul",
    "lower_bound_outer",
    "make_discrete_platform",
    "make_uniform_platform",
    "objective",
    "objective_first_order",
    "optimize_beta",
    "parse_csv",
    "parse_scenario",
    "phase1_volume_outer",
    "phase2_volume_outer",
    "phase_threshold",
    "phase_volumes_matmul",
    "run_recipe",
    "run_simulation",
    "run_sweep",
    "sample_knowledge_growth",
    "save_speeds",
    "switch_fraction",
    "t_fraction",
    "tasks_for_cross_matmul",
    "tasks_for_cross_outer",
    "total_tasks",
    "write_trace_csv",
]
